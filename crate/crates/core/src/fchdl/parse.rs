use super::{Direction, FchdlError, NetName, Netlist, OperatorInstance, OperatorKind, Slot};

/// Words that may begin a multi-word net name such as `Output I`.
const PORT_WORDS: [&str; 2] = ["Input", "Output"];

struct Item<'a> {
    text: &'a str,
    offset: usize,
}

struct Scanner<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    /// Skips whitespace, stray `;` between operators and `//` comments.
    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() || c == ';' => {
                    self.bump();
                }
                Some('/') if self.src[self.pos..].starts_with("//") => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    /// Consumes up to (not including) the next delimiter.
    fn take_until_delim(&mut self) -> Item<'a> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if matches!(c, '(' | ')' | ',' | ';') {
                break;
            }
            if c == '/' && self.src[self.pos..].starts_with("//") {
                break;
            }
            self.bump();
        }
        trimmed(self.src, start, self.pos)
    }
}

fn trimmed(src: &str, start: usize, end: usize) -> Item<'_> {
    let raw = &src[start..end];
    let lead = raw.len() - raw.trim_start().len();
    Item {
        text: raw.trim(),
        offset: start + lead,
    }
}

fn syntax(offset: usize, message: impl Into<String>) -> FchdlError {
    FchdlError::SyntaxError {
        offset,
        message: message.into(),
    }
}

/// Parses FC-HDL source into a netlist.
pub fn parse_circuit(text: &str) -> Result<Netlist, FchdlError> {
    let mut sc = Scanner { src: text, pos: 0 };
    let mut operators = Vec::new();
    loop {
        sc.skip_trivia();
        if sc.peek().is_none() {
            break;
        }
        let name = sc.take_until_delim();
        match sc.peek() {
            Some('(') => {}
            Some(c) => return Err(syntax(sc.pos, format!("unexpected `{c}`, expected `(`"))),
            None => {
                return Err(syntax(
                    sc.pos,
                    format!("expected `(` after `{}`", name.text),
                ))
            }
        }
        if name.text.is_empty() {
            return Err(syntax(sc.pos, "missing operator name before `(`"));
        }
        let kind = OperatorKind::from_name(name.text).ok_or_else(|| FchdlError::UnknownOperator {
            offset: name.offset,
            name: name.text.to_string(),
        })?;
        let open = sc.pos;
        sc.bump();
        let groups = parse_args(&mut sc, open)?;
        operators.push(build_operator(operators.len(), kind, name.offset, groups)?);
    }
    if operators.is_empty() {
        return Err(FchdlError::EmptyCircuit { offset: 0 });
    }
    Ok(Netlist::new(operators))
}

fn parse_args<'a>(sc: &mut Scanner<'a>, open: usize) -> Result<Vec<Vec<Item<'a>>>, FchdlError> {
    let mut groups = vec![Vec::new()];
    loop {
        let item = sc.take_until_delim();
        let delim = sc.peek();
        if item.text.is_empty() {
            let at = sc.pos;
            match delim {
                None => return Err(syntax(open, "unbalanced `(`: missing `)`")),
                // `NOT()` or a trailing separator.
                _ => return Err(syntax(at, "empty argument")),
            }
        }
        check_name_words(&item)?;
        groups.last_mut().expect("non-empty").push(item);
        match sc.bump() {
            Some(',') => {}
            Some(';') => groups.push(Vec::new()),
            Some(')') => return Ok(groups),
            Some('(') => return Err(syntax(sc.pos - 1, "unexpected `(` inside argument list")),
            Some(_) => return Err(syntax(open, "unbalanced `(`: comment inside argument list")),
            None => return Err(syntax(open, "unbalanced `(`: missing `)`")),
        }
    }
}

/// Interior whitespace is only legal in port-style names (`Output I`);
/// elsewhere it almost always means a missing comma.
fn check_name_words(item: &Item<'_>) -> Result<(), FchdlError> {
    let mut words = item.text.split_whitespace();
    let first = words.next().unwrap_or_default();
    if words.next().is_none() || PORT_WORDS.contains(&first) {
        return Ok(());
    }
    let second = item.text[first.len()..].trim_start();
    let at = item.offset + (item.text.len() - second.len());
    Err(syntax(
        at,
        format!("unexpected `{}`: separate net names with `,`", second),
    ))
}

fn build_operator(
    id: usize,
    kind: OperatorKind,
    offset: usize,
    groups: Vec<Vec<Item<'_>>>,
) -> Result<OperatorInstance, FchdlError> {
    let signature = kind.signature();
    if groups.len() < signature.len() {
        let last = groups.last().and_then(|g| g.last()).map_or(offset, |i| i.offset);
        return Err(syntax(
            last,
            format!(
                "{kind} expects {} `;`-separated argument groups, found {}",
                signature.len(),
                groups.len()
            ),
        ));
    }
    if groups.len() > signature.len() {
        return Err(FchdlError::ArityError {
            offset,
            kind,
            expected: format!("{} argument groups", signature.len()),
            found: groups.len().to_string(),
        });
    }

    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut params = Vec::new();
    let mut direction = None;
    for (gi, (group, slots)) in groups.iter().zip(signature).enumerate() {
        let required = slots.iter().filter(|s| **s != Slot::OptionalNumber).count();
        if group.len() < required || group.len() > slots.len() {
            return Err(FchdlError::ArityError {
                offset: group.first().map_or(offset, |i| i.offset),
                kind,
                expected: describe_group(slots),
                found: format!("{} item(s) in group {}", group.len(), gi + 1),
            });
        }
        for (item, slot) in group.iter().zip(slots.iter()) {
            match slot {
                Slot::Input => inputs.push(NetName::new(item.text)),
                Slot::Output => outputs.push(NetName::new(item.text)),
                Slot::Number | Slot::OptionalNumber => params.push(parse_number(kind, item)?),
                Slot::Direction => direction = Some(parse_direction(item)?),
            }
        }
    }
    OperatorInstance::new(id, kind, inputs, outputs, params, direction).map_err(|e| match e {
        FchdlError::ArityError { kind, expected, found, .. } => FchdlError::ArityError {
            offset,
            kind,
            expected,
            found,
        },
        FchdlError::BadParameter { message, .. } => FchdlError::BadParameter { offset, message },
        FchdlError::SyntaxError { message, .. } => FchdlError::SyntaxError { offset, message },
        other => other,
    })
}

fn describe_group(slots: &[Slot]) -> String {
    slots
        .iter()
        .map(|s| match s {
            Slot::Input => "input",
            Slot::Output => "output",
            Slot::Number => "number",
            Slot::OptionalNumber => "[number]",
            Slot::Direction => "direction",
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn parse_number(kind: OperatorKind, item: &Item<'_>) -> Result<f64, FchdlError> {
    match item.text.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(v) => Err(FchdlError::BadParameter {
            offset: item.offset,
            message: format!("{kind} parameter must be positive, got {v}"),
        }),
        Err(_) => Err(FchdlError::BadParameter {
            offset: item.offset,
            message: format!("{kind} parameter `{}` is not a number", item.text),
        }),
    }
}

fn parse_direction(item: &Item<'_>) -> Result<Direction, FchdlError> {
    match item.text.to_ascii_lowercase().as_str() {
        "forward" => Ok(Direction::Forward),
        "backward" => Ok(Direction::Backward),
        _ => Err(FchdlError::BadParameter {
            offset: item.offset,
            message: format!("diode direction must be forward or backward, got `{}`", item.text),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(set: &std::collections::BTreeSet<NetName>) -> Vec<&str> {
        set.iter().map(|n| n.as_str()).collect()
    }

    #[test]
    fn full_adder_sum() {
        let n = parse_circuit("XOR(a, b; S1) XOR(S1, cin; sum)").unwrap();
        assert_eq!(n.len(), 2);
        assert_eq!(names(n.nets()), ["S1", "a", "b", "cin", "sum"]);
        assert_eq!(names(n.primary_inputs()), ["a", "b", "cin"]);
        assert_eq!(names(n.primary_outputs()), ["sum"]);
    }

    #[test]
    fn dg90_corrected() {
        let n = parse_circuit(
            "NOT(A; C) NOT(B; D) OR (C, D; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)",
        )
        .unwrap();
        assert_eq!(n.len(), 5);
        let timer = &n.operators()[3];
        assert_eq!(timer.kind, OperatorKind::Timer);
        assert_eq!(timer.params, vec![1800.0]);
        assert_eq!(n.operators()[4].outputs[0].as_str(), "Output I");
        assert_eq!(names(n.primary_inputs()), ["A", "B"]);
        assert_eq!(names(n.primary_outputs()), ["Output I"]);
    }

    #[test]
    fn not_with_two_inputs_is_arity_error() {
        let err = parse_circuit("NOT(A, B; C)").unwrap_err();
        assert!(matches!(err, FchdlError::ArityError { kind: OperatorKind::Not, .. }), "{err:?}");
    }

    #[test]
    fn blank_is_empty_circuit() {
        assert_eq!(parse_circuit("  \n\t").unwrap_err(), FchdlError::EmptyCircuit { offset: 0 });
        assert_eq!(parse_circuit("").unwrap_err(), FchdlError::EmptyCircuit { offset: 0 });
    }

    #[test]
    fn space_separated_names_are_syntax_errors() {
        let err = parse_circuit("NOT(A B; C)").unwrap_err();
        assert_eq!(err.offset(), 6);
        assert!(matches!(err, FchdlError::SyntaxError { .. }));
    }

    #[test]
    fn unbalanced_parens() {
        let err = parse_circuit("AND(A, B; Q").unwrap_err();
        assert!(matches!(err, FchdlError::SyntaxError { offset: 3, .. }), "{err:?}");
        let err = parse_circuit("AND(A, B; Q))").unwrap_err();
        assert!(matches!(err, FchdlError::SyntaxError { offset: 12, .. }), "{err:?}");
        let err = parse_circuit("AND(A, (B; Q)").unwrap_err();
        assert!(matches!(err, FchdlError::SyntaxError { .. }), "{err:?}");
    }

    #[test]
    fn missing_separator() {
        let err = parse_circuit("NOT(A, C)").unwrap_err();
        assert!(matches!(err, FchdlError::SyntaxError { .. }), "{err:?}");
    }

    #[test]
    fn unknown_operator_reports_position() {
        let err = parse_circuit("NOT(A; B) Latch(B; C)").unwrap_err();
        assert_eq!(
            err,
            FchdlError::UnknownOperator { offset: 10, name: "Latch".into() }
        );
    }

    #[test]
    fn bad_parameters() {
        for src in ["Timer(A, 0; B)", "Timer(A, -3; B)", "Filter(A, fast; B)", "Diode(A, sideways; B)", "Timer(A, inf; B)"] {
            let err = parse_circuit(src).unwrap_err();
            assert!(matches!(err, FchdlError::BadParameter { .. }), "{src}: {err:?}");
        }
    }

    #[test]
    fn operator_names_case_insensitive() {
        let a = parse_circuit("timer(A,10;B)").unwrap();
        let b = parse_circuit("Timer(A, 10; B)").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn edge_detector_default_pulse() {
        let n = parse_circuit("EdgeDetector(A; Q)").unwrap();
        assert_eq!(n.operators()[0].params, vec![0.5]);
        let n = parse_circuit("EdgeDetector(A; Q, 0.25)").unwrap();
        assert_eq!(n.operators()[0].params, vec![0.25]);
    }

    #[test]
    fn mux_and_demux_groups() {
        let n = parse_circuit("Multiplexer(D0, D1, D2, D3; S1, S2; Output)").unwrap();
        assert_eq!(n.operators()[0].inputs.len(), 6);
        let n = parse_circuit("Demultiplexer(Input; S1, S2; D0, D1, D2, D3)").unwrap();
        assert_eq!(n.operators()[0].outputs.len(), 4);
        let err = parse_circuit("Multiplexer(D0, D1, D2; S1, S2; Output)").unwrap_err();
        assert!(matches!(err, FchdlError::ArityError { .. }));
    }

    #[test]
    fn trailing_semicolons_and_comments() {
        let n = parse_circuit("Filter(A, 1; B); //frequency gate\nDiode(B, forward; C);").unwrap();
        assert_eq!(n.len(), 2);
        assert_eq!(n.operators()[1].direction, Some(Direction::Forward));
    }

    #[test]
    fn serialize_canonical_form() {
        let n = parse_circuit("NOT(A; C)").unwrap();
        assert_eq!(n.to_hdl(), "NOT(A; C)");
        let n = parse_circuit("OR (C, D; Q)   timer(Q,1800;Output I)").unwrap();
        assert_eq!(n.to_hdl(), "OR(C, D; Q) Timer(Q, 1800; Output I)");
        let n = parse_circuit("EdgeDetector(A; Q)").unwrap();
        assert_eq!(n.to_hdl(), "EdgeDetector(A; Q, 0.5)");
    }
}
