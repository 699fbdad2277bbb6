//! Textual formats: `.net` files, constraint equations and reduction traces.
//!
//! A net file is line oriented:
//!
//! ```text
//! net house
//! pl p1 (10)
//! pl p2
//! tr t4 p1 -> p2
//! tr t9 p2*2 -> p3 p4*3   # weights with `*`
//! ```
//!
//! Places used by a transition before (or without) a `pl` line are declared
//! implicitly with no tokens. Repeated arcs between the same pair add up.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::linear::{LinearConstraint, Relation, Var};
use crate::net::{Net, NetBuilder, NetError};
use crate::reduce::{ReductionStep, ReductionTrace, RuleKind};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: {source}")]
    Net {
        line: usize,
        #[source]
        source: NetError,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ParseError {
    fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }
}

/// Where a net comes from.
#[derive(Clone, Debug)]
pub enum NetSource {
    Path(PathBuf),
    Text(String),
}

impl NetSource {
    pub fn load(&self) -> Result<Net, ParseError> {
        match self {
            NetSource::Text(t) => parse_net(t),
            NetSource::Path(p) => read_net(p),
        }
    }
}

pub fn read_net(path: impl AsRef<Path>) -> Result<Net, ParseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_net(&text)
}

/// Whitespace-separated tokens of one line, with 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out.into_iter()
        .map(|(b, t)| (line[..b].chars().count() + 1, t))
        .collect()
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_arc(tok: &str, line: usize, column: usize) -> Result<(String, u64), ParseError> {
    let (name, weight) = match tok.split_once('*') {
        Some((n, w)) => {
            if w.starts_with('-') {
                return Err(ParseError::syntax(line, column, format!("negative weight in `{tok}`")));
            }
            let w: u64 = w
                .parse()
                .map_err(|_| ParseError::syntax(line, column, format!("bad weight in `{tok}`")))?;
            (n, w)
        }
        None => (tok, 1),
    };
    if !is_ident(name) {
        return Err(ParseError::syntax(line, column, format!("bad place name `{name}`")));
    }
    Ok((name.to_string(), weight))
}

/// Parses the `.net` format.
pub fn parse_net(text: &str) -> Result<Net, ParseError> {
    let mut builder = NetBuilder::new("");
    let mut named = false;
    for (ix, raw) in text.lines().enumerate() {
        let line = ix + 1;
        let toks = tokens(strip_comment(raw));
        let Some(&(col, head)) = toks.first() else {
            continue;
        };
        match head {
            "net" => {
                if named {
                    return Err(ParseError::syntax(line, col, "duplicate `net` line"));
                }
                match toks.as_slice() {
                    [_, (_, name)] => {
                        builder.name(*name);
                        named = true;
                    }
                    _ => return Err(ParseError::syntax(line, col, "expected `net NAME`")),
                }
            }
            "pl" => {
                let Some(&(ncol, name)) = toks.get(1) else {
                    return Err(ParseError::syntax(line, col, "expected `pl ID (NAT)`"));
                };
                if !is_ident(name) {
                    return Err(ParseError::syntax(line, ncol, format!("bad place name `{name}`")));
                }
                let rest: String = toks[2..].iter().map(|t| t.1).collect();
                let tokens_count = if rest.is_empty() {
                    0
                } else {
                    let mcol = toks[2].0;
                    let inner = rest
                        .strip_prefix('(')
                        .and_then(|r| r.strip_suffix(')'))
                        .ok_or_else(|| ParseError::syntax(line, mcol, "expected `(NAT)`"))?;
                    if inner.starts_with('-') {
                        return Err(ParseError::syntax(line, mcol, "negative marking"));
                    }
                    inner
                        .parse::<u64>()
                        .map_err(|_| ParseError::syntax(line, mcol, format!("bad marking `{inner}`")))?
                };
                builder
                    .add_place(name, tokens_count)
                    .map_err(|source| ParseError::Net { line, source })?;
            }
            "tr" => {
                let Some(&(ncol, name)) = toks.get(1) else {
                    return Err(ParseError::syntax(line, col, "expected `tr ID IN... -> OUT...`"));
                };
                if !is_ident(name) {
                    return Err(ParseError::syntax(
                        line,
                        ncol,
                        format!("bad transition name `{name}`"),
                    ));
                }
                let arrow = toks
                    .iter()
                    .position(|t| t.1 == "->")
                    .ok_or_else(|| ParseError::syntax(line, col, "missing `->`"))?;
                if arrow < 2 {
                    return Err(ParseError::syntax(line, col, "missing transition name"));
                }
                let mut inputs = Vec::new();
                for &(c, t) in &toks[2..arrow] {
                    inputs.push(parse_arc(t, line, c)?);
                }
                let mut outputs = Vec::new();
                for &(c, t) in &toks[arrow + 1..] {
                    outputs.push(parse_arc(t, line, c)?);
                }
                let ins: Vec<(&str, u64)> = inputs.iter().map(|(n, w)| (n.as_str(), *w)).collect();
                let outs: Vec<(&str, u64)> = outputs.iter().map(|(n, w)| (n.as_str(), *w)).collect();
                builder
                    .add_transition(name, &ins, &outs)
                    .map_err(|source| ParseError::Net { line, source })?;
            }
            other => {
                return Err(ParseError::syntax(
                    line,
                    col,
                    format!("unexpected `{other}`, expected `net`, `pl` or `tr`"),
                ))
            }
        }
    }
    Ok(builder.build())
}

/// Prints a net in the `.net` format; [`parse_net`] reads it back unchanged.
pub fn serialize_net(net: &Net) -> String {
    let mut out = format!("net {}\n", net.name());
    for p in net.place_ids() {
        match net.initial(p) {
            0 => writeln!(out, "pl {}", net.place_name(p)).unwrap(),
            k => writeln!(out, "pl {} ({k})", net.place_name(p)).unwrap(),
        }
    }
    let arc = |out: &mut String, p, w| {
        out.push(' ');
        out.push_str(net.place_name(p));
        if w > 1 {
            write!(out, "*{w}").unwrap();
        }
    };
    for t in net.transition_ids() {
        write!(out, "tr {}", net.transition_name(t)).unwrap();
        for &(p, w) in net.pre(t) {
            arc(&mut out, p, w);
        }
        out.push_str(" ->");
        for &(p, w) in net.post(t) {
            arc(&mut out, p, w);
        }
        out.push('\n');
    }
    out
}

fn parse_side(
    text: &str,
    line: usize,
    offset: usize,
) -> Result<(Vec<(Var, i64)>, i64), ParseError> {
    let mut terms = Vec::new();
    let mut constant = 0i64;
    let mut sign = 1i64;
    let mut expect_term = true;
    for (col, tok) in tokens(text) {
        let column = offset + col;
        match tok {
            "+" | "-" if !expect_term => {
                sign = if tok == "+" { 1 } else { -1 };
                expect_term = true;
            }
            "-" if expect_term && terms.is_empty() && constant == 0 => sign = -sign,
            _ if expect_term => {
                if let Some((k, v)) = tok.split_once('.') {
                    let k: i64 = k
                        .parse()
                        .map_err(|_| ParseError::syntax(line, column, format!("bad coefficient in `{tok}`")))?;
                    if !is_ident(v) {
                        return Err(ParseError::syntax(line, column, format!("bad variable `{v}`")));
                    }
                    terms.push((v.to_string(), sign * k));
                } else if is_ident(tok) {
                    terms.push((tok.to_string(), sign));
                } else {
                    let k: i64 = tok
                        .parse()
                        .map_err(|_| ParseError::syntax(line, column, format!("bad term `{tok}`")))?;
                    constant += sign * k;
                }
                sign = 1;
                expect_term = false;
            }
            _ => return Err(ParseError::syntax(line, column, format!("expected `+` before `{tok}`"))),
        }
    }
    if expect_term {
        return Err(ParseError::syntax(line, offset + text.chars().count(), "missing term"));
    }
    Ok((terms, constant))
}

fn parse_constraint_at(text: &str, line: usize, offset: usize) -> Result<LinearConstraint, ParseError> {
    let (op, relation, swap) = if let Some(i) = text.find("<=") {
        (i, Relation::Le, false)
    } else if let Some(i) = text.find(">=") {
        (i, Relation::Le, true)
    } else if let Some(i) = text.find('=') {
        (i, Relation::Eq, false)
    } else {
        return Err(ParseError::syntax(line, offset + 1, "missing relation"));
    };
    let width = if relation == Relation::Eq && !swap { 1 } else { 2 };
    let left = &text[..op];
    let right = &text[op + width..];
    let right_offset = offset + text[..op + width].chars().count();
    let (l_terms, l_const) = parse_side(left, line, offset)?;
    let (r_terms, r_const) = parse_side(right, line, right_offset)?;
    // `L >= R` is stored as `R <= L`; constants gather on the right
    let (lhs, rhs_terms, rhs_const) = if swap {
        (r_terms, l_terms, l_const - r_const)
    } else {
        (l_terms, r_terms, r_const - l_const)
    };
    LinearConstraint::new(lhs, relation, rhs_terms, rhs_const)
        .map_err(|e| ParseError::syntax(line, offset + 1, e.to_string()))
}

/// Parses one equation or inequality, e.g. `2.p2 = a1` or `a17 <= 10`.
pub fn parse_constraint(text: &str) -> Result<LinearConstraint, ParseError> {
    parse_constraint_at(text, 1, 0)
}

/// One line per step: `<K> |- <equation>`.
pub fn serialize_trace(trace: &ReductionTrace) -> String {
    serialize_steps(&trace.steps)
}

pub fn serialize_steps(steps: &[ReductionStep]) -> String {
    let mut out = String::new();
    for s in steps {
        writeln!(out, "{s}").unwrap();
    }
    out
}

fn parse_marking_list(text: &str, line: usize, column: usize) -> Result<Vec<(String, u64)>, ParseError> {
    let inner = text
        .trim()
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| ParseError::syntax(line, column, "expected `{place:count, ...}`"))?;
    let mut out = Vec::new();
    for item in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (p, k) = item
            .split_once(':')
            .ok_or_else(|| ParseError::syntax(line, column, format!("bad marking entry `{item}`")))?;
        let (p, k) = (p.trim(), k.trim());
        if !is_ident(p) {
            return Err(ParseError::syntax(line, column, format!("bad place name `{p}`")));
        }
        let k: u64 = k
            .parse()
            .map_err(|_| ParseError::syntax(line, column, format!("bad count `{k}`")))?;
        out.push((p.to_string(), k));
    }
    Ok(out)
}

/// Reads back the output of [`serialize_trace`].
///
/// Steps carry their constraint and the places they remove or introduce.
/// Transitions removed by `L` steps are not part of the text and stay empty.
pub fn parse_trace(text: &str) -> Result<Vec<ReductionStep>, ParseError> {
    let mut steps = Vec::new();
    for (ix, raw) in text.lines().enumerate() {
        let line = ix + 1;
        let content = strip_comment(raw);
        if content.trim().is_empty() {
            continue;
        }
        let (head, body) = content
            .split_once("|-")
            .ok_or_else(|| ParseError::syntax(line, 1, "expected `<K> |- ...`"))?;
        let body_col = head.chars().count() + 2;
        let kind = match head.trim() {
            "T" => RuleKind::T,
            "R" => RuleKind::R,
            "A" => RuleKind::A,
            "L" => RuleKind::L,
            "F" => RuleKind::F,
            "D" => RuleKind::D,
            other => {
                return Err(ParseError::syntax(line, 1, format!("unknown rule kind `{other}`")))
            }
        };
        let step = match kind {
            RuleKind::T | RuleKind::D => {
                let toks = tokens(body);
                match toks.as_slice() {
                    [(_, t), (_, "removed")] if is_ident(t) => ReductionStep::transition_removal(kind, t),
                    _ => return Err(ParseError::syntax(line, body_col, "expected `ID removed`")),
                }
            }
            RuleKind::F => {
                let (t, rest) = body
                    .split_once("fired at")
                    .ok_or_else(|| ParseError::syntax(line, body_col, "expected `ID fired at {...}`"))?;
                let t = t.trim();
                if !is_ident(t) {
                    return Err(ParseError::syntax(line, body_col, format!("bad transition `{t}`")));
                }
                let marking = parse_marking_list(rest, line, body_col)?;
                ReductionStep::fire_once(t, marking)
            }
            RuleKind::R | RuleKind::A | RuleKind::L => {
                let c = parse_constraint_at(body, line, body_col)?;
                let lhs_var = match c.lhs.as_slice() {
                    [(v, _)] => v.clone(),
                    _ => {
                        return Err(ParseError::syntax(
                            line,
                            body_col,
                            "left-hand side must be a single variable",
                        ))
                    }
                };
                match kind {
                    RuleKind::R if c.relation == Relation::Eq => ReductionStep::redundant_place(c, lhs_var),
                    RuleKind::A if c.relation == Relation::Eq && c.rhs_const == 0 => {
                        let parts = c.rhs_terms.iter().map(|(v, _)| v.clone()).collect();
                        ReductionStep::agglomeration(lhs_var, parts)
                    }
                    RuleKind::L if c.relation == Relation::Le && c.rhs_terms.is_empty() => {
                        ReductionStep::source_sink(&lhs_var, c.rhs_const.max(0) as u64, None)
                    }
                    _ => {
                        return Err(ParseError::syntax(
                            line,
                            body_col,
                            format!("equation `{c}` does not fit rule {}", kind.letter()),
                        ))
                    }
                }
            }
        };
        steps.push(step);
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_net() {
        let net = parse_net("net n\npl p0 (1)\ntr t0 p0 -> p1").unwrap();
        assert_eq!(net.name(), "n");
        assert_eq!(net.num_places(), 2);
        assert_eq!(net.num_transitions(), 1);
        assert_eq!(net.initial(net.place("p0").unwrap()), 1);
        assert_eq!(net.initial(net.place("p1").unwrap()), 0);
    }

    #[test]
    fn weights() {
        let net = parse_net("tr t0 p0*2 -> q0*3").unwrap();
        let t = net.transition("t0").unwrap();
        assert_eq!(net.pre_weight(t, net.place("p0").unwrap()), 2);
        assert_eq!(net.post_weight(t, net.place("q0").unwrap()), 3);
    }

    #[test]
    fn duplicate_arcs_add_up() {
        let net = parse_net("tr t p p*2 -> q").unwrap();
        let t = net.transition("t").unwrap();
        assert_eq!(net.pre_weight(t, net.place("p").unwrap()), 3);
    }

    #[test]
    fn chain_round_trip() {
        let text = "net chain\npl p (2)\npl q\ntr t p -> q\n";
        let net = parse_net(text).unwrap();
        assert_eq!(serialize_net(&net), text);
        assert_eq!(parse_net(&serialize_net(&net)).unwrap(), net);
    }

    #[test]
    fn empty_net_serializes_to_header() {
        assert_eq!(serialize_net(&Net::new("empty")), "net empty\n");
    }

    #[test]
    fn single_place_serialization() {
        let net = parse_net("pl p (3)").unwrap();
        assert!(serialize_net(&net).contains("pl p (3)"));
    }

    #[test]
    fn errors_carry_positions() {
        match parse_net("net n\ntr t p*-1 -> q").unwrap_err() {
            ParseError::Syntax { line, column, message } => {
                assert_eq!((line, column), (2, 6));
                assert!(message.contains("negative"));
            }
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(
            parse_net("pl p (1)\npl p (2)"),
            Err(ParseError::Net { line: 2, .. })
        ));
        assert!(parse_net("pl p (1)\npl p (1)").is_ok());
        assert!(matches!(
            parse_net("tr t -> q\ntr t -> q"),
            Err(ParseError::Net { line: 2, .. })
        ));
        assert!(matches!(parse_net("pl t\ntr t -> t"), Err(ParseError::Net { .. })));
        assert!(matches!(parse_net("place p"), Err(ParseError::Syntax { line: 1, column: 1, .. })));
        assert!(matches!(parse_net("tr t p q"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn comments_and_crlf() {
        let net = parse_net("# header\r\nnet n # name\r\npl p (2) # tokens\r\ntr t p -> \r\n").unwrap();
        assert_eq!(net.num_places(), 1);
        assert_eq!(net.num_transitions(), 1);
    }

    #[test]
    fn constraint_round_trips() {
        for text in ["a1 = p11 + p7", "2.p2 = a1", "a17 <= 10", "a3 = 1", "p = q + 2", "2.p = 3.q + r + 1"] {
            let c = parse_constraint(text).unwrap();
            assert_eq!(c.to_string(), text);
        }
        let c = parse_constraint("a >= b + 2").unwrap();
        assert_eq!(c.relation, Relation::Le);
        assert_eq!(c.to_string(), "b <= a - 2");
        assert!(parse_constraint("a + = b").is_err());
        assert!(parse_constraint("a b").is_err());
        assert!(parse_constraint("3 = a").is_err());
    }

    #[test]
    fn trace_lines_parse() {
        let text = "R |- p19 = p20\nA |- a1 = p11 + p7\nT |- t12 removed\nD |- t3 removed\n\
                    F |- t5 fired at {s:1, p:2}\nL |- a17 <= 10\n";
        let steps = parse_trace(text).unwrap();
        assert_eq!(steps.len(), 6);
        assert_eq!(serialize_steps(&steps), text);
        assert_eq!(steps[1].introduced_place.as_deref(), Some("a1"));
        assert_eq!(steps[1].removed_places, ["p11", "p7"]);
        assert_eq!(steps[0].removed_places, ["p19"]);
        assert_eq!(steps[4].removed_transitions, ["t5"]);
        assert!(parse_trace("X |- p = q").is_err());
        assert!(parse_trace("A |- a <= p").is_err());
    }
}
