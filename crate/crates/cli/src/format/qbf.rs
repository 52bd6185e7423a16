//! Quantified boolean formulas: `exists x1 forall x2 . (x1 | x2)`.
//! Rendering is `QbfInstance`'s `Display`.

use esl_core::formula::parse_formula;
use esl_core::qbf::{QbfInstance, Quant};

use super::{content_lines, FormatError};

/// Parses one instance; the text may span several lines.
pub fn parse_qbf(text: &str) -> Result<QbfInstance, FormatError> {
    let first = content_lines(text).next().map_or(1, |(n, _)| n);
    let joined: Vec<&str> = content_lines(text).map(|(_, l)| l).collect();
    let joined = joined.join(" ");
    let (prefix, matrix) = joined
        .split_once(" . ")
        .or_else(|| joined.strip_prefix(". ").map(|m| ("", m)))
        .ok_or_else(|| FormatError::new(first, "expected `<prefix> . <matrix>`"))?;
    let words: Vec<&str> = prefix.split_whitespace().collect();
    if !words.len().is_multiple_of(2) {
        return Err(FormatError::new(first, "each quantifier needs one variable"));
    }
    let mut quants = Vec::new();
    for pair in words.chunks(2) {
        let q = match pair[0] {
            "exists" => Quant::Exists,
            "forall" => Quant::Forall,
            w => return Err(FormatError::new(first, format!("expected `exists` or `forall`, found `{w}`"))),
        };
        quants.push((q, pair[1].to_string()));
    }
    let matrix = parse_formula(matrix).map_err(|e| FormatError::new(first, e.to_string()))?;
    QbfInstance::new(quants, matrix).map_err(|e| FormatError::new(first, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use esl_core::qbf::eval_qbf_oracle;

    #[test]
    fn parses_and_round_trips() {
        let q = parse_qbf("exists x1 forall x2 . (x1 | x2)").unwrap();
        assert_eq!(q.num_vars(), 2);
        assert!(eval_qbf_oracle(&q).unwrap());
        assert_eq!(parse_qbf(&q.to_string()).unwrap(), q);
        let multi = parse_qbf("# comment\nexists a\nforall b .\n  a <-> b\n").unwrap();
        assert!(!eval_qbf_oracle(&multi).unwrap());
    }

    #[test]
    fn reports_problems() {
        assert!(parse_qbf("exists x1 (x1)").is_err());
        assert!(parse_qbf("some x . x").unwrap_err().msg.contains("some"));
        assert!(parse_qbf("exists x . y").unwrap_err().msg.contains("y"));
        assert_eq!(parse_qbf("\n\nexists x . x &").unwrap_err().line, 3);
    }
}
