use num_traits::{One, Zero};

use super::{LevelTable, StepKind, StepRecord};
use crate::error::{Error, Result};
use crate::rational::{int, one, ratio, zero, Rational};

pub const VW_Y1: (i64, i64) = (5, 11);
pub const VW_Y2: (i64, i64) = (79, 88);

/// A selected neighbour, or a virtual dummy at degree 1.
#[derive(Debug, Clone)]
pub(crate) struct Slot {
    pub node: Option<usize>,
    pub x: Rational,
    pub w: Rational,
}

impl Slot {
    fn dummy() -> Self {
        Slot {
            node: None,
            x: one(),
            w: one(),
        }
    }
}

/// The two neighbours of smallest degree, ties to the lower index, padded with dummies.
pub(crate) fn two_smallest(nbrs: &[usize], degrees: &[Rational]) -> [Slot; 2] {
    let mut order: Vec<usize> = nbrs.to_vec();
    order.sort_by(|&a, &b| degrees[a].cmp(&degrees[b]).then(a.cmp(&b)));
    let mut it = order.into_iter().map(|i| Slot {
        node: Some(i),
        x: degrees[i].clone(),
        w: one(),
    });
    let first = it.next().unwrap_or_else(Slot::dummy);
    let second = it.next().unwrap_or_else(Slot::dummy);
    [first, second]
}

fn updates(t: usize, slots: &[Slot; 2], new: [&Rational; 2], kind: StepKind) -> StepRecord {
    let ups: Vec<_> = slots
        .iter()
        .zip(new)
        .filter_map(|(s, n)| s.node.map(|i| (i, s.x.clone(), n.clone())))
        .collect();
    StepRecord::from_updates(t, &ups, kind)
}

/// Raises the two lowest neighbours to `(x1 + x2 + 1 - x1 x2) / 2`.
pub fn water_level_step(t: usize, nbrs: &[usize], degrees: &[Rational]) -> StepRecord {
    let slots = two_smallest(nbrs, degrees);
    let (x1, x2) = (&slots[0].x, &slots[1].x);
    if x1.is_one() {
        return StepRecord::noop(t);
    }
    let xf = (x1 + x2 + one() - x1 * x2) / int(2);
    let kind = if x2.is_one() {
        StepKind::Deterministic
    } else {
        StepKind::Random
    };
    updates(t, &slots, [&xf, &xf], kind)
}

/// One step of the k-level algorithm; degrees must lie on `table`.
pub fn klevel_step(
    t: usize,
    nbrs: &[usize],
    degrees: &[Rational],
    table: &LevelTable,
) -> Result<StepRecord> {
    for &i in nbrs {
        if table.index_of(&degrees[i]).is_none() {
            return Err(Error::violation(
                t,
                format!("degree {} of node {i} is not a level", degrees[i]),
            ));
        }
    }
    let slots = two_smallest(nbrs, degrees);
    let (x1, x2) = (&slots[0].x, &slots[1].x);
    if x1.is_one() {
        return Ok(StepRecord::noop(t));
    }
    let k = table.k();
    if x1 < x2 || x1 == table.z(k) {
        return Ok(updates(t, &slots, [&one(), x2], StepKind::Deterministic));
    }
    let i = table.index_of(x1).expect("checked above");
    let next = table.z(i + 1);
    Ok(updates(t, &slots, [next, next], StepKind::Random))
}

/// Level duals `y(0) = 0, y(1/2) = 5/11, y(7/8) = 79/88, y(1) = 1`.
pub(crate) fn vw_dual(x: &Rational) -> Rational {
    if x.is_zero() {
        zero()
    } else if x == &ratio(1, 2) {
        ratio(VW_Y1.0, VW_Y1.1)
    } else if x == &ratio(7, 8) {
        ratio(VW_Y2.0, VW_Y2.1)
    } else {
        one()
    }
}

/// Picks the two neighbours of largest dual slack `w_i (1 - y(x_i))` and labels
/// them so that `x_1 <= x_2`, with `w_1 <= w_2` on equal degrees.
pub(crate) fn vw_select(nbrs: &[usize], degrees: &[Rational], weights: &[Rational]) -> [Slot; 2] {
    let slack = |i: usize| &weights[i] * (one() - vw_dual(&degrees[i]));
    let mut order: Vec<(Rational, usize)> = nbrs.iter().map(|&i| (slack(i), i)).collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut it = order.into_iter().map(|(_, i)| Slot {
        node: Some(i),
        x: degrees[i].clone(),
        w: weights[i].clone(),
    });
    let a = it.next().unwrap_or_else(Slot::dummy);
    let b = it.next().unwrap_or_else(Slot::dummy);
    let swap = match a.x.cmp(&b.x) {
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Equal => match a.w.cmp(&b.w) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => a.node > b.node && b.node.is_some(),
        },
    };
    if swap {
        [b, a]
    } else {
        [a, b]
    }
}

/// The seven-case rule of the vertex-weighted two-level algorithm.
pub fn vertex_weighted_step(
    t: usize,
    nbrs: &[usize],
    degrees: &[Rational],
    weights: &[Rational],
) -> Result<StepRecord> {
    let table = LevelTable::two_level();
    for &i in nbrs {
        if table.index_of(&degrees[i]).is_none() {
            return Err(Error::violation(
                t,
                format!("degree {} of node {i} is not in {{0, 1/2, 7/8, 1}}", degrees[i]),
            ));
        }
    }
    let slots = vw_select(nbrs, degrees, weights);
    let (x1, x2) = (slots[0].x.clone(), slots[1].x.clone());
    if x1.is_one() {
        return Ok(StepRecord::noop(t));
    }
    let det1 = |s: &[Slot; 2]| updates(t, s, [&one(), &x2], StepKind::Deterministic);
    let det2 = |s: &[Slot; 2]| updates(t, s, [&x1, &one()], StepKind::Deterministic);
    if x2.is_one() {
        return Ok(det1(&slots));
    }
    let w = &slots[1].w / &slots[0].w;
    let y1 = ratio(VW_Y1.0, VW_Y1.1);
    let y2 = ratio(VW_Y2.0, VW_Y2.1);
    let half = ratio(1, 2);
    let seven8 = ratio(7, 8);

    let step = if x1.is_zero() && x2.is_zero() {
        if w <= one() / (one() - &y1) {
            updates(t, &slots, [&half, &half], StepKind::Random)
        } else {
            det2(&slots)
        }
    } else if x1 == half && x2 == half {
        if w <= (one() - &y1) / (one() - &y2) {
            updates(t, &slots, [&seven8, &seven8], StepKind::Random)
        } else {
            det2(&slots)
        }
    } else if x1 == seven8 && x2 == seven8 {
        if w <= one() {
            det1(&slots)
        } else {
            det2(&slots)
        }
    } else if x1.is_zero() && x2 == half {
        if w <= ratio(3, 2) {
            det1(&slots)
        } else {
            updates(t, &slots, [&half, &one()], StepKind::Shift)
        }
    } else if x1.is_zero() && x2 == seven8 {
        if w <= ratio(11, 2) {
            det1(&slots)
        } else {
            updates(t, &slots, [&seven8, &one()], StepKind::Shift)
        }
    } else if w <= int(4) {
        det1(&slots)
    } else {
        det2(&slots)
    };
    Ok(step)
}
