//! The per-arrival probability-setting program.
//!
//! Given the increases `Δx_1, Δx_2`, prior degrees `x_1, x_2` and the
//! probability `p_12` that both nodes are free, find `a_i` (probability of
//! matching `i` when both are free) and `b_i` (probability of matching `i`
//! when only `i` is free) such that
//!
//! ```text
//! a_1 + a_2 <= 1
//! a_i >= 0
//! b_i <= 1
//! b_i >= a_i
//! b_i <= a_i / (1 - a_{3-i})          (vacuous when a_{3-i} = 1)
//! a_i p_12 + b_i (1 - x_i - p_12) = Δx_i
//! ```

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{one, zero, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbProgramInput {
    pub dx: [Rational; 2],
    pub x: [Rational; 2],
    pub p12: Rational,
}

impl ProbProgramInput {
    pub fn new(dx1: Rational, dx2: Rational, x1: Rational, x2: Rational, p12: Rational) -> Self {
        ProbProgramInput {
            dx: [dx1, dx2],
            x: [x1, x2],
            p12,
        }
    }

    pub fn is_sound(&self) -> bool {
        &self.dx[0] + &self.dx[1] <= one() - &self.x[0] * &self.x[1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbProgramSolution {
    pub a: [Rational; 2],
    pub b: [Rational; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// `a_1 + a_2 <= 1`
    SumA,
    NonNegA(usize),
    BAtMostOne(usize),
    BAtLeastA(usize),
    Correlation(usize),
    Marginal(usize),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::SumA => f.write_str("a_1 + a_2 <= 1"),
            Constraint::NonNegA(i) => write!(f, "a_{} >= 0", i + 1),
            Constraint::BAtMostOne(i) => write!(f, "b_{} <= 1", i + 1),
            Constraint::BAtLeastA(i) => {
                write!(f, "b_{} >= a_{}", i + 1, i + 1)
            }
            Constraint::Correlation(i) => {
                write!(f, "b_{} <= a_{} / (1 - a_{})", i + 1, i + 1, 2 - i)
            }
            Constraint::Marginal(i) => write!(
                f,
                "a_{} p_12 + b_{} (1 - x_{} - p_12) = dx_{}",
                i + 1,
                i + 1,
                i + 1,
                i + 1
            ),
        }
    }
}

/// Violated constraints; empty means feasible.
pub fn check_feasible(sol: &ProbProgramSolution, input: &ProbProgramInput) -> Vec<Constraint> {
    let mut out = Vec::new();
    let (a, b) = (&sol.a, &sol.b);
    if &a[0] + &a[1] > one() {
        out.push(Constraint::SumA);
    }
    for i in 0..2 {
        let j = 1 - i;
        if a[i].is_negative() {
            out.push(Constraint::NonNegA(i));
        }
        if b[i] > one() {
            out.push(Constraint::BAtMostOne(i));
        }
        if b[i] < a[i] {
            out.push(Constraint::BAtLeastA(i));
        }
        if a[j] < one() && &b[i] * (one() - &a[j]) > a[i] {
            out.push(Constraint::Correlation(i));
        }
        let lhs = &a[i] * &input.p12 + &b[i] * (one() - &input.x[i] - &input.p12);
        if lhs != input.dx[i] {
            out.push(Constraint::Marginal(i));
        }
    }
    out
}

fn validate(input: &ProbProgramInput) -> Result<()> {
    let err = |m: String| Err(Error::InfeasibleInput(m));
    for i in 0..2 {
        let (x, d) = (&input.x[i], &input.dx[i]);
        if x.is_negative() || x > &one() {
            return err(format!("x_{} = {x} outside [0, 1]", i + 1));
        }
        if d.is_negative() || d > &(one() - x) {
            return err(format!("dx_{} = {d} outside [0, 1 - x_{}]", i + 1, i + 1));
        }
    }
    let p = &input.p12;
    let cap = (one() - &input.x[0]).min(one() - &input.x[1]);
    if p.is_negative() || p > &cap {
        return err(format!("p_12 = {p} outside [0, min(1 - x_1, 1 - x_2)]"));
    }
    for i in 0..2 {
        if (one() - &input.x[i] - p).is_zero() && &input.dx[i] > p {
            return err(format!(
                "dx_{} = {} exceeds p_12 while node {} is never free alone",
                i + 1,
                input.dx[i],
                i + 1
            ));
        }
    }
    Ok(())
}

/// Probability of matching `i` when it is the only free node of the pair.
fn initial(input: &ProbProgramInput, i: usize) -> Rational {
    let free = one() - &input.x[i];
    if free.is_zero() {
        zero()
    } else {
        &input.dx[i] / free
    }
}

/// Lowest `a_i` on the marginal line with `b_i <= 1` and `a_i >= 0`.
fn floor_point(input: &ProbProgramInput, i: usize) -> (Rational, Rational) {
    let p = &input.p12;
    let q = one() - &input.x[i] - p;
    let d = &input.dx[i];
    if q.is_zero() {
        (d / p, one())
    } else if d >= &q {
        ((d - &q) / p, one())
    } else {
        (zero(), d / q)
    }
}

/// Finds a feasible point, starting from `a_i = b_i = Δx_i / (1 - x_i)` and
/// moving along the marginal line towards the floor point until `a_1 + a_2 = 1`.
pub fn solve(input: &ProbProgramInput) -> Result<ProbProgramSolution> {
    validate(input)?;
    let r = [initial(input, 0), initial(input, 1)];
    let total = &r[0] + &r[1];
    if total <= one() {
        return Ok(ProbProgramSolution {
            a: r.clone(),
            b: r,
        });
    }
    if input.p12.is_zero() {
        // Both nodes are never free together.
        let a = [&r[0] / &total, &r[1] / &total];
        return Ok(ProbProgramSolution { a, b: r });
    }
    let f = [floor_point(input, 0), floor_point(input, 1)];
    let floor_sum = &f[0].0 + &f[1].0;
    if floor_sum > one() {
        return Err(Error::InfeasibleInput(format!(
            "even the floor point needs a_1 + a_2 = {floor_sum} > 1"
        )));
    }
    let lambda = (&total - one()) / (&total - &floor_sum);
    let lerp = |from: &Rational, to: &Rational| from + &lambda * (to - from);
    let a = [lerp(&r[0], &f[0].0), lerp(&r[1], &f[1].0)];
    let b = [lerp(&r[0], &f[0].1), lerp(&r[1], &f[1].1)];
    Ok(ProbProgramSolution { a, b })
}

/// The maximal-case solution `b_i = 1`, `a_1 = (1 - x_2 - Δx_2) / ((1 - x_1)(1 - x_2))`.
pub fn maximal_closed_form(
    dx1: &Rational,
    dx2: &Rational,
    x1: &Rational,
    x2: &Rational,
) -> Result<ProbProgramSolution> {
    if x1.is_one() || x2.is_one() || x1 > &one() || x2 > &one() {
        return Err(Error::InfeasibleInput(
            "closed form needs both degrees below 1; use the singleton rule".into(),
        ));
    }
    if dx1 + dx2 != one() - x1 * x2 {
        return Err(Error::InfeasibleInput(
            "closed form needs a maximal step (dx_1 + dx_2 = 1 - x_1 x_2)".into(),
        ));
    }
    let prod = (one() - x1) * (one() - x2);
    let a1 = (one() - x2 - dx2) / &prod;
    let a2 = (one() - x1 - dx1) / &prod;
    Ok(ProbProgramSolution {
        a: [a1, a2],
        b: [one(), one()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{parse, ratio};
    use proptest::prelude::*;

    fn input(v: [&str; 5]) -> ProbProgramInput {
        let r: Vec<Rational> = v.iter().map(|s| parse(s).unwrap()).collect();
        ProbProgramInput::new(r[0].clone(), r[1].clone(), r[2].clone(), r[3].clone(), r[4].clone())
    }

    fn sol(a: [(i64, i64); 2], b: [(i64, i64); 2]) -> ProbProgramSolution {
        ProbProgramSolution {
            a: [ratio(a[0].0, a[0].1), ratio(a[1].0, a[1].1)],
            b: [ratio(b[0].0, b[0].1), ratio(b[1].0, b[1].1)],
        }
    }

    #[test]
    fn zero_increase() {
        let inp = input(["0", "0", "0.3", "0.5", "0.35"]);
        let s = solve(&inp).unwrap();
        assert!(s.a.iter().chain(&s.b).all(Zero::is_zero));
        assert!(check_feasible(&s, &inp).is_empty());
    }

    #[test]
    fn below_one_returns_initial_point() {
        let inp = input(["0.2", "0.1", "0.5", "0.5", "0.25"]);
        let s = solve(&inp).unwrap();
        assert_eq!(s, sol([(2, 5), (1, 5)], [(2, 5), (1, 5)]));
        assert!(check_feasible(&s, &inp).is_empty());
    }

    #[test]
    fn first_arrival_pair() {
        // a = b = 1/2 already satisfies every constraint; (1/2, 1) does too.
        let inp = input(["1/2", "1/2", "0", "0", "1"]);
        let s = solve(&inp).unwrap();
        assert_eq!(s, sol([(1, 2), (1, 2)], [(1, 2), (1, 2)]));
        assert!(check_feasible(&sol([(1, 2), (1, 2)], [(1, 1), (1, 1)]), &inp).is_empty());
    }

    #[test]
    fn interpolation_hits_sum_one() {
        let inp = input(["3/8", "3/8", "1/2", "1/2", "1/4"]);
        let s = solve(&inp).unwrap();
        assert_eq!(s, sol([(1, 2), (1, 2)], [(1, 1), (1, 1)]));
        assert!(check_feasible(&s, &inp).is_empty());
    }

    #[test]
    fn zero_overlap_scales_a() {
        let inp = input(["3/4", "1/2", "0", "1/2", "0"]);
        let s = solve(&inp).unwrap();
        assert_eq!(&s.a[0] + &s.a[1], one());
        assert!(check_feasible(&s, &inp).is_empty());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(solve(&input(["1", "0", "1/2", "0", "0"])).is_err());
        assert!(solve(&input(["0", "0", "0", "0", "2"])).is_err());
        // Node 1 is never free alone, but needs more than p_12.
        assert!(solve(&input(["3/4", "0", "1/2", "0", "1/2"])).is_err());
        // Floor point already exceeds one.
        assert!(solve(&input(["1", "1", "0", "0", "1/2"])).is_err());
    }

    #[test]
    fn checker_reports_b_below_a() {
        let inp = input(["1/2", "1/2", "0", "0", "1"]);
        let bad = sol([(1, 2), (1, 2)], [(1, 4), (1, 2)]);
        let v = check_feasible(&bad, &inp);
        assert!(v.contains(&Constraint::BAtLeastA(0)));
        assert_eq!(Constraint::BAtLeastA(0).to_string(), "b_1 >= a_1");
    }

    #[test]
    fn closed_form_examples() {
        let half = ratio(1, 2);
        let s = maximal_closed_form(&half, &half, &zero(), &zero()).unwrap();
        assert_eq!(s.a, [half.clone(), half.clone()]);
        let s = maximal_closed_form(&ratio(3, 8), &ratio(3, 8), &half, &half).unwrap();
        assert_eq!(s.a, [half.clone(), half.clone()]);
        let s = maximal_closed_form(&ratio(3, 4), &ratio(1, 4), &zero(), &zero()).unwrap();
        assert_eq!(s.a, [ratio(3, 4), ratio(1, 4)]);
        let inp = ProbProgramInput::new(ratio(3, 4), ratio(1, 4), zero(), zero(), one());
        assert!(check_feasible(&s, &inp).is_empty());
        assert!(maximal_closed_form(&half, &zero(), &half, &one()).is_err());
    }

    fn dyadic(max: i64) -> impl Strategy<Value = Rational> {
        (0..=max).prop_map(move |v| ratio(v, max))
    }

    proptest! {
        #[test]
        fn solve_is_feasible_on_sound_inputs(
            x1 in dyadic(64), x2 in dyadic(64),
            f1 in dyadic(64), f2 in dyadic(64), fp in dyadic(64),
        ) {
            let d1 = &f1 * (one() - &x1);
            let d2 = &f2 * (one() - &x2);
            let p = &fp * (one() - &x1) * (one() - &x2);
            let inp = ProbProgramInput::new(d1, d2, x1, x2, p);
            prop_assume!(inp.is_sound());
            let s = solve(&inp).unwrap();
            prop_assert!(check_feasible(&s, &inp).is_empty(), "{inp:?} -> {s:?}");
        }

        #[test]
        fn closed_form_feasible_for_maximal_steps(
            x1 in dyadic(32), x2 in dyadic(32), share in dyadic(32),
        ) {
            prop_assume!(x1 < one() && x2 < one());
            let total = one() - &x1 * &x2;
            let lo = (&total - (one() - &x2)).max(zero());
            let hi = (one() - &x1).min(total.clone());
            prop_assume!(lo <= hi);
            let d1 = &lo + &share * (&hi - &lo);
            let d2 = &total - &d1;
            let s = maximal_closed_form(&d1, &d2, &x1, &x2).unwrap();
            prop_assert_eq!(&s.a[0] + &s.a[1], one());
            let p = (one() - &x1) * (one() - &x2);
            let inp = ProbProgramInput::new(d1, d2, x1, x2, p);
            prop_assert!(check_feasible(&s, &inp).is_empty());
        }
    }
}
