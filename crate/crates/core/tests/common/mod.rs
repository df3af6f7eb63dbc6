//! Test-only oracles. Nothing here calls into the metric or gradient code it
//! is used to check.

#![allow(dead_code)]

use orcu::encoding::DistanceMetric;
use orcu::losses::BarrierConfig;
use orcu::metrics::PredictionSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central differences of `f` at `x`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            let orig = probe[k];
            probe[k] = orig + h;
            let up = f(&probe);
            probe[k] = orig - h;
            let down = f(&probe);
            probe[k] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `|a - n| / max(1, |a|, |n|)`: relative for large entries, absolute below 1.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

/// Gradient-vector relative error `max|a - n| / max(1, max|a|, max|n|)`.
///
/// Normalizing by the vector scale rather than per entry keeps the check
/// meaningful where pair terms cancel on one logit: near the barrier kink at
/// large `t` the central difference itself carries `h^2 f'''/6 ~ 1e-6` of
/// truncation error, against gradient entries of order `t`.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = analytic
        .iter()
        .zip(numeric)
        .fold(0.0f64, |m, (a, n)| m.max((a - n).abs()));
    diff / 1f64.max(inf(analytic)).max(inf(numeric))
}

pub const TEMPERATURES: [f64; 4] = [1.0, 3.0, 5.0, 10.0];

pub fn random_metric(rng: &mut impl Rng) -> DistanceMetric {
    match rng.random_range(0..4) {
        0 => DistanceMetric::Squared,
        1 => DistanceMetric::Absolute,
        2 => DistanceMetric::Huber {
            delta: rng.random_range(0.5..2.0),
        },
        _ => DistanceMetric::Exponential,
    }
}

/// Pair margins as the regularizer defines them, computed independently.
fn margins(z: &[f64], y: usize) -> Vec<f64> {
    (0..z.len() - 1)
        .map(|p| if p < y { z[p] - z[p + 1] } else { z[p + 1] - z[p] })
        .collect()
}

/// A random ordinal instance whose pair margins keep a distance of at least
/// `margin` from the barrier kink, so no central difference straddles it.
pub fn random_instance(
    rng: &mut impl Rng,
    margin: f64,
) -> (Vec<f64>, usize, BarrierConfig, DistanceMetric) {
    loop {
        let c = rng.random_range(2..=10);
        let y = rng.random_range(0..c);
        let t = TEMPERATURES[rng.random_range(0..TEMPERATURES.len())];
        let cfg = BarrierConfig::new(t).unwrap();
        let z: Vec<f64> = (0..c).map(|_| rng.random_range(-4.0..4.0)).collect();
        if margins(&z, y)
            .iter()
            .all(|r| (r - cfg.boundary()).abs() > margin)
        {
            return (z, y, cfg, random_metric(rng));
        }
    }
}

/// Random probability rows, half of them on a coarse grid so that ties and
/// exact bin edges occur.
pub fn random_prediction_set(rng: &mut impl Rng, max_n: usize, max_c: usize) -> PredictionSet {
    let n = rng.random_range(1..=max_n);
    let c = rng.random_range(2..=max_c);
    let coarse = rng.random_bool(0.5);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let w: Vec<f64> = if coarse {
            (0..c).map(|_| rng.random_range(0..5) as f64).collect()
        } else {
            let sharp = rng.random_range(0.5..4.0);
            (0..c).map(|_| rng.random::<f64>().powf(sharp)).collect()
        };
        let total: f64 = w.iter().sum();
        rows.push(if total == 0.0 {
            vec![1.0 / c as f64; c]
        } else {
            w.iter().map(|v| v / total).collect()
        });
    }
    let labels = (0..n).map(|_| rng.random_range(0..c)).collect();
    PredictionSet::new(rows, labels, c).unwrap()
}

pub fn rows_of(p: &PredictionSet) -> Vec<Vec<f64>> {
    p.rows().map(|r| r.to_vec()).collect()
}

fn first_argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for k in 0..row.len() {
        if row[k] > row[best] {
            best = k;
        }
    }
    best
}

fn in_bin(c: f64, b: usize, bins: usize) -> bool {
    let lo = b as f64 / bins as f64;
    let hi = (b + 1) as f64 / bins as f64;
    c >= lo && (c < hi || b == bins - 1)
}

/// Scans every bin over every sample.
fn binned_gap(pairs: &[(f64, bool)], bins: usize, n_total: usize) -> f64 {
    let mut total = 0.0;
    for b in 0..bins {
        let members: Vec<&(f64, bool)> = pairs.iter().filter(|(c, _)| in_bin(*c, b, bins)).collect();
        if members.is_empty() {
            continue;
        }
        let m = members.len() as f64;
        let conf = members.iter().map(|(c, _)| c).sum::<f64>() / m;
        let acc = members.iter().filter(|(_, hit)| *hit).count() as f64 / m;
        total += m / n_total as f64 * (acc - conf).abs();
    }
    total
}

pub fn oracle_ece(p: &PredictionSet, bins: usize) -> f64 {
    let pairs: Vec<(f64, bool)> = rows_of(p)
        .iter()
        .zip(p.labels())
        .map(|(row, &y)| {
            let k = first_argmax(row);
            (row[k], k == y)
        })
        .collect();
    binned_gap(&pairs, bins, p.len())
}

pub fn oracle_sce(p: &PredictionSet, bins: usize) -> f64 {
    let rows = rows_of(p);
    let c = p.num_classes();
    (0..c)
        .map(|k| {
            let pairs: Vec<(f64, bool)> = rows
                .iter()
                .zip(p.labels())
                .map(|(row, &y)| (row[k], y == k))
                .collect();
            binned_gap(&pairs, bins, p.len())
        })
        .sum::<f64>()
        / c as f64
}

pub fn oracle_ace(p: &PredictionSet, ranges: usize) -> f64 {
    let rows = rows_of(p);
    let n = rows.len();
    let c = p.num_classes();
    let mut sizes = vec![n / ranges; ranges];
    for s in sizes.iter_mut().take(n % ranges) {
        *s += 1;
    }
    let mut total = 0.0;
    for k in 0..c {
        // sort by (confidence, original index): a stable order
        let mut keyed: Vec<(f64, usize)> = rows.iter().enumerate().map(|(i, r)| (r[k], i)).collect();
        keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut pos = 0;
        for &s in &sizes {
            let cell = &keyed[pos..pos + s];
            pos += s;
            let conf = cell.iter().map(|(v, _)| v).sum::<f64>() / s as f64;
            let acc = cell.iter().filter(|(_, i)| p.labels()[*i] == k).count() as f64 / s as f64;
            total += (acc - conf).abs();
        }
    }
    total / (c * ranges) as f64
}

/// QWK from pairwise sums: observed disagreement over matched pairs, expected
/// disagreement over all label/prediction pairs.
pub fn oracle_qwk(preds: &[usize], labels: &[usize], c: usize) -> f64 {
    let w = |i: usize, j: usize| ((i as f64 - j as f64) / (c as f64 - 1.0)).powi(2);
    let n = preds.len() as f64;
    let observed: f64 = preds.iter().zip(labels).map(|(&p, &l)| w(l, p)).sum();
    let mut expected = 0.0;
    for &l in labels {
        for &p in preds {
            expected += w(l, p);
        }
    }
    expected /= n;
    if expected == 0.0 {
        return 1.0;
    }
    1.0 - observed / expected
}

/// Checks every ordered pair on each side of the label, not just neighbours.
pub fn oracle_unimodal(p: &PredictionSet) -> f64 {
    let rows = rows_of(p);
    let ok = rows
        .iter()
        .zip(p.labels())
        .filter(|(row, &y)| {
            let c = row.len();
            let rising = (0..=y).all(|i| (i..=y).all(|j| row[i] <= row[j]));
            let falling = (y..c).all(|i| (i..c).all(|j| row[i] >= row[j]));
            rising && falling
        })
        .count();
    ok as f64 / rows.len() as f64
}

pub fn oracle_predicted(p: &PredictionSet) -> Vec<usize> {
    rows_of(p).iter().map(|r| first_argmax(r)).collect()
}
