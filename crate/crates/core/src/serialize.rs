//! Flat training-text format:
//!
//! ```text
//! User : <turn> System : <turn> ... <|environment|> <grounding> => <response>
//! ```
//!
//! Turns are joined by the separator, every field is separated from its
//! label or marker by one space, and the environment section is left out
//! entirely when the grounding is empty.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DialogTurn, GroundedInstance, Speaker};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WireFormatConfig {
    pub env_marker: String,
    pub target_marker: String,
    pub user_prefix: String,
    pub system_prefix: String,
    pub turn_separator: String,
}

impl Default for WireFormatConfig {
    fn default() -> Self {
        WireFormatConfig {
            env_marker: "<|environment|>".into(),
            target_marker: "=>".into(),
            user_prefix: "User :".into(),
            system_prefix: "System :".into(),
            turn_separator: " ".into(),
        }
    }
}

impl WireFormatConfig {
    pub fn prefix(&self, speaker: Speaker) -> &str {
        match speaker {
            Speaker::User => &self.user_prefix,
            Speaker::System => &self.system_prefix,
        }
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [
            ("env_marker", &self.env_marker),
            ("target_marker", &self.target_marker),
            ("user_prefix", &self.user_prefix),
            ("system_prefix", &self.system_prefix),
        ] {
            if v.is_empty() {
                return Err(Error::Config(format!("{name} must not be empty")));
            }
        }
        if self.turn_separator.is_empty() {
            return Err(Error::Config("turn_separator must not be empty".into()));
        }
        if self.user_prefix == self.system_prefix {
            return Err(Error::Config("speaker prefixes must differ".into()));
        }
        Ok(())
    }
}

fn ensure_absent(text: &str, marker: &str, field: impl FnOnce() -> String) -> Result<()> {
    if text.contains(marker) {
        Err(Error::MarkerCollision {
            marker: marker.to_owned(),
            field: field(),
        })
    } else {
        Ok(())
    }
}

/// Model input for `instance`: context and environment up to and including
/// the target marker, without the gold target.
pub fn serialize_prompt(instance: &GroundedInstance, cfg: &WireFormatConfig) -> Result<String> {
    cfg.check()?;
    let markers = [&cfg.env_marker, &cfg.target_marker];
    for (i, turn) in instance.context.iter().enumerate() {
        for m in markers.iter().copied().chain([&cfg.user_prefix, &cfg.system_prefix]) {
            ensure_absent(&turn.text, m, || format!("context turn {i}"))?;
        }
    }
    for m in markers {
        ensure_absent(&instance.environment, m, || "environment".into())?;
    }

    let mut out = String::new();
    for (i, turn) in instance.context.iter().enumerate() {
        if i > 0 {
            out.push_str(&cfg.turn_separator);
        }
        out.push_str(cfg.prefix(turn.speaker));
        out.push(' ');
        out.push_str(&turn.text);
    }
    if !instance.environment.is_empty() {
        out.push(' ');
        out.push_str(&cfg.env_marker);
        out.push(' ');
        out.push_str(&instance.environment);
    }
    out.push(' ');
    out.push_str(&cfg.target_marker);
    Ok(out)
}

/// Training line for `instance`: the prompt followed by the target.
pub fn serialize_instance(instance: &GroundedInstance, cfg: &WireFormatConfig) -> Result<String> {
    let mut out = serialize_prompt(instance, cfg)?;
    for m in [&cfg.env_marker, &cfg.target_marker] {
        ensure_absent(&instance.target, m, || "target".into())?;
    }
    out.push(' ');
    out.push_str(&instance.target);
    Ok(out)
}

/// Inverse of [`serialize_instance`]. The returned instance has an empty id;
/// use [`parse_instance_with_id`] to assign one.
pub fn parse_instance(line: &str, cfg: &WireFormatConfig) -> Result<GroundedInstance> {
    cfg.check()?;
    let (head, target) = split_once_marker(line, &cfg.target_marker, "target marker")?
        .ok_or_else(|| Error::MalformedLine("missing target marker".into()))?;
    let (context, environment) = match split_once_marker(head, &cfg.env_marker, "environment marker")? {
        Some((ctx, env)) => (ctx, env),
        None => (head, ""),
    };
    Ok(GroundedInstance {
        instance_id: String::new(),
        context: parse_context(context, cfg)?,
        environment: environment.to_owned(),
        target: target.to_owned(),
    })
}

pub fn parse_instance_with_id(line: &str, cfg: &WireFormatConfig, id: impl Into<String>) -> Result<GroundedInstance> {
    let mut inst = parse_instance(line, cfg)?;
    inst.instance_id = id.into();
    Ok(inst)
}

/// Splits `s` around the single ` marker ` occurrence. A marker at the very
/// end (empty right side) is accepted as `" marker"`.
fn split_once_marker<'a>(s: &'a str, marker: &str, what: &str) -> Result<Option<(&'a str, &'a str)>> {
    let count = s.matches(marker).count();
    if count == 0 {
        return Ok(None);
    }
    if count > 1 {
        return Err(Error::MalformedLine(format!("{what} occurs {count} times")));
    }
    let at = s.find(marker).expect("counted above");
    let left = s[..at]
        .strip_suffix(' ')
        .ok_or_else(|| Error::MalformedLine(format!("{what} is not preceded by a space")))?;
    let rest = &s[at + marker.len()..];
    let right = match rest.strip_prefix(' ') {
        Some(r) => r,
        None if rest.is_empty() => rest,
        None => return Err(Error::MalformedLine(format!("{what} is not followed by a space"))),
    };
    Ok(Some((left, right)))
}

fn parse_context(s: &str, cfg: &WireFormatConfig) -> Result<Vec<DialogTurn>> {
    let labels: [(Speaker, String); 2] = [
        (Speaker::User, format!("{} ", cfg.user_prefix)),
        (Speaker::System, format!("{} ", cfg.system_prefix)),
    ];
    let starts_turn = |rest: &str| {
        labels
            .iter()
            .find(|(_, label)| rest.starts_with(label.as_str()))
            .map(|(sp, label)| (*sp, label.len()))
    };

    let (mut speaker, skip) = starts_turn(s)
        .ok_or_else(|| Error::MalformedLine("context does not start with a speaker label".into()))?;
    let mut turns = Vec::new();
    let mut text_start = skip;
    let mut pos = skip;
    let sep = cfg.turn_separator.as_str();
    while pos <= s.len() {
        let boundary = s[pos..].find(sep).map(|o| pos + o);
        let Some(b) = boundary else { break };
        if let Some((next, skip)) = starts_turn(&s[b + sep.len()..]) {
            turns.push(DialogTurn::new(speaker, &s[text_start..b]));
            speaker = next;
            text_start = b + sep.len() + skip;
            pos = text_start;
        } else {
            // not a turn boundary: the separator belongs to the turn text
            pos = b + sep.len();
        }
    }
    turns.push(DialogTurn::new(speaker, &s[text_start..]));
    Ok(turns)
}

/// Escapes a serialized instance for the one-instance-per-line file format.
/// Backslash, LF and CR are written as `\\`, `\n` and `\r`.
pub fn escape_line(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_line(s: &str) -> Result<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                return Err(Error::MalformedLine(format!(
                    "bad escape sequence `\\{}`",
                    other.map(String::from).unwrap_or_default()
                )))
            }
        }
    }
    Ok(out)
}

/// Renders every instance as one escaped line; the map keeps instance ids
/// in emission order for the companion id file.
pub fn serialize_lines<'a, I>(instances: I, cfg: &WireFormatConfig) -> Result<(String, Vec<String>)>
where
    I: IntoIterator<Item = &'a GroundedInstance>,
{
    let mut text = String::new();
    let mut ids = Vec::new();
    for inst in instances {
        text.push_str(&escape_line(&serialize_instance(inst, cfg)?));
        text.push('\n');
        ids.push(inst.instance_id.clone());
    }
    Ok((text, ids))
}

/// Parses a training-text file; instance ids are `line-<n>` (1-based).
pub fn parse_lines(text: &str, cfg: &WireFormatConfig) -> Result<BTreeMap<usize, GroundedInstance>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let inst = parse_instance_with_id(&unescape_line(l)?, cfg, format!("line-{}", i + 1))?;
            Ok((i + 1, inst))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn restaurant_instance() -> GroundedInstance {
        GroundedInstance {
            instance_id: "r1".into(),
            context: vec![
                DialogTurn::user("I would like to find an expensive restaurant that serves Chinese food."),
                DialogTurn::system("sure, which area do you prefer ?"),
                DialogTurn::user("Bellevue downtown."),
            ],
            environment: "Multiple expensive Chinese restaurants in Bellevue downtown.".into(),
            target: "There are multiple restaurants meet your requirement. peony kitchen is a great Chinese Restaurant. Would you like to book a table there?".into(),
        }
    }

    const RESTAURANT_LINE: &str = "User : I would like to find an expensive restaurant that serves Chinese food. \
System : sure, which area do you prefer ? User : Bellevue downtown. \
<|environment|> Multiple expensive Chinese restaurants in Bellevue downtown. => \
There are multiple restaurants meet your requirement. peony kitchen is a great Chinese Restaurant. \
Would you like to book a table there?";

    #[test]
    fn restaurant_instance_serializes_exactly() {
        let cfg = WireFormatConfig::default();
        assert_eq!(serialize_instance(&restaurant_instance(), &cfg).unwrap(), RESTAURANT_LINE);
        let back = parse_instance_with_id(RESTAURANT_LINE, &cfg, "r1").unwrap();
        assert_eq!(back, restaurant_instance());
    }

    #[test]
    fn empty_environment_is_omitted() {
        let inst = GroundedInstance {
            instance_id: "x".into(),
            context: vec![DialogTurn::user("hi")],
            environment: String::new(),
            target: "hello".into(),
        };
        let cfg = WireFormatConfig::default();
        assert_eq!(serialize_instance(&inst, &cfg).unwrap(), "User : hi => hello");
        let back = parse_instance("User : hi => hello", &cfg).unwrap();
        assert_eq!(back.context, vec![DialogTurn::user("hi")]);
        assert_eq!(back.environment, "");
        assert_eq!(back.target, "hello");
    }

    #[test]
    fn marker_in_turn_text_collides() {
        let mut inst = restaurant_instance();
        inst.context[1].text = "a => b".into();
        let err = serialize_instance(&inst, &WireFormatConfig::default()).unwrap_err();
        assert!(matches!(err, Error::MarkerCollision { ref marker, .. } if marker == "=>"));
        let mut inst = restaurant_instance();
        inst.target = "see <|environment|>".into();
        assert!(serialize_instance(&inst, &WireFormatConfig::default()).is_err());
    }

    #[test]
    fn malformed_lines() {
        let cfg = WireFormatConfig::default();
        assert!(matches!(parse_instance("User : hi", &cfg), Err(Error::MalformedLine(_))));
        assert!(matches!(parse_instance("User : a => b => c", &cfg), Err(Error::MalformedLine(_))));
        assert!(matches!(parse_instance("hi => there", &cfg), Err(Error::MalformedLine(_))));
    }

    #[test]
    fn whitespace_inside_turns_survives() {
        let inst = GroundedInstance {
            instance_id: String::new(),
            context: vec![DialogTurn::user(" two  spaces "), DialogTurn::system("x"), DialogTurn::user("y ")],
            environment: "line one\nline two".into(),
            target: "  t".into(),
        };
        let cfg = WireFormatConfig::default();
        let s = serialize_instance(&inst, &cfg).unwrap();
        assert_eq!(parse_instance(&s, &cfg).unwrap(), inst);
        let escaped = escape_line(&s);
        assert!(!escaped.contains('\n'));
        assert_eq!(unescape_line(&escaped).unwrap(), s);
    }
}
