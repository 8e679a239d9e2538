//! OBMI v1 text format.
//!
//! ```text
//! OBMI v1
//! <n>
//! <w_0> <w_1> ... <w_{n-1}>      integers or p/q
//! <T>
//! <neighbours of arrival 0>       space separated, may be empty
//! ...
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_traits::Signed;

use super::Instance;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

const HEADER: &str = "OBMI v1";

pub fn parse_instance(text: &str) -> Result<Instance> {
    let lines: Vec<&str> = text.lines().collect();
    let line = |idx: usize| -> Result<&str> {
        lines
            .get(idx)
            .copied()
            .ok_or_else(|| Error::parse(idx + 1, "unexpected end of file"))
    };

    if line(0)?.trim() != HEADER {
        return Err(Error::parse(1, format!("expected header `{HEADER}`")));
    }
    let n: usize = line(1)?
        .trim()
        .parse()
        .map_err(|_| Error::parse(2, "expected the offline node count"))?;

    let weights: Vec<Rational> = line(2)?
        .split_whitespace()
        .map(|tok| rational::parse(tok).map_err(|e| Error::parse(3, e.to_string())))
        .collect::<Result<_>>()?;
    if weights.len() != n {
        return Err(Error::parse(
            3,
            format!("expected {n} weights, found {}", weights.len()),
        ));
    }
    if let Some(pos) = weights.iter().position(|w| !w.is_positive()) {
        return Err(Error::parse(3, format!("weight {pos} is not positive")));
    }

    let t_count: usize = line(3)?
        .trim()
        .parse()
        .map_err(|_| Error::parse(4, "expected the arrival count"))?;

    let mut arrivals = Vec::with_capacity(t_count);
    for t in 0..t_count {
        let lineno = 5 + t;
        let mut seen = BTreeSet::new();
        let mut nbrs = Vec::new();
        for tok in line(4 + t)?.split_whitespace() {
            let i: usize = tok
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad neighbour index `{tok}`")))?;
            if i >= n {
                return Err(Error::parse(
                    lineno,
                    format!("neighbour index {i} out of range (n = {n})"),
                ));
            }
            if !seen.insert(i) {
                return Err(Error::parse(lineno, format!("duplicate neighbour {i}")));
            }
            nbrs.push(i);
        }
        arrivals.push(nbrs);
    }
    if let Some(extra) = lines[(4 + t_count).min(lines.len())..]
        .iter()
        .position(|l| !l.trim().is_empty())
    {
        return Err(Error::parse(
            5 + t_count + extra,
            "trailing content after the last arrival",
        ));
    }

    Instance::new(weights, arrivals)
}

pub fn serialize_instance(inst: &Instance) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    let _ = writeln!(out, "{}", inst.n());
    let weights: Vec<String> = inst.weights().iter().map(rational::format).collect();
    let _ = writeln!(out, "{}", weights.join(" "));
    let _ = writeln!(out, "{}", inst.num_arrivals());
    for nbrs in inst.arrivals() {
        let line: Vec<String> = nbrs.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    #[test]
    fn minimal_file() {
        let inst = parse_instance("OBMI v1\n2\n1 1\n1\n0 1\n").unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.arrivals(), &[vec![0, 1]]);
    }

    #[test]
    fn out_of_range_names_line() {
        let err = parse_instance("OBMI v1\n2\n1 1\n2\n0\n5\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn other_parse_errors() {
        let cases = [
            ("OBMI v2\n1\n1\n0\n", 1),
            ("OBMI v1\n2\n1\n0\n", 3),
            ("OBMI v1\n1\n0\n0\n", 3),
            ("OBMI v1\n1\n-1/2\n0\n", 3),
            ("OBMI v1\n2\n1 1\n1\n1 1\n", 5),
            ("OBMI v1\n1\n1\n2\n0\n", 6),
            ("OBMI v1\n1\n1\n1\n0\n0\n", 6),
        ];
        for (text, expected) in cases {
            match parse_instance(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, expected, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn canonical_round_trip() {
        let text = "OBMI v1\n3\n1 5/11 2\n3\n0 2\n\n1\n";
        assert_eq!(serialize_instance(&parse_instance(text).unwrap()), text);
    }

    #[test]
    fn serialize_examples() {
        let inst = Instance::new(vec![int(1)], vec![vec![0]]).unwrap();
        let text = serialize_instance(&inst);
        assert_eq!(text.lines().count(), 5);
        assert_eq!(text, "OBMI v1\n1\n1\n1\n0\n");

        let inst = Instance::new(vec![ratio(5, 11)], vec![vec![]]).unwrap();
        assert_eq!(serialize_instance(&inst), "OBMI v1\n1\n5/11\n1\n\n");
    }

    #[test]
    fn whitespace_is_normalised() {
        let messy = "OBMI v1\n 2 \n1   3/2\n1\n 1  0 \n";
        let inst = parse_instance(messy).unwrap();
        assert_eq!(serialize_instance(&inst), "OBMI v1\n2\n1 3/2\n1\n1 0\n");
    }

    fn arb_instance() -> impl Strategy<Value = Instance> {
        (1usize..6, 0usize..6).prop_flat_map(|(n, t)| {
            let weights = proptest::collection::vec((1i64..20, 1i64..7), n);
            let arrivals = proptest::collection::vec(
                proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 0..=n),
                t,
            );
            (weights, arrivals).prop_map(|(w, a)| {
                let w = w.into_iter().map(|(p, q)| ratio(p, q)).collect();
                Instance::new(w, a).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn parse_serialize_identity(inst in arb_instance()) {
            let text = serialize_instance(&inst);
            let back = parse_instance(&text).unwrap();
            prop_assert_eq!(&back, &inst);
            prop_assert_eq!(serialize_instance(&back), text);
        }
    }
}
