//! Reference implementations used as test oracles. They follow the textbook
//! definitions literally and share no code with the library.
#![allow(dead_code)]

use rand::Rng;

/// Direct double sum over risk sets, no stabilization.
pub fn brute_force_loss(risk: &[f64], times: &[f64], events: &[bool]) -> f64 {
    let n = risk.len();
    let mut loss = 0.0;
    for i in 0..n {
        if !events[i] {
            continue;
        }
        let denom: f64 = (0..n).filter(|&j| times[j] >= times[i]).map(|j| risk[j].exp()).sum();
        loss -= risk[i] - denom.ln();
    }
    loss
}

/// Central finite differences of `f` at `x` with step `h`.
pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + h;
            let up = f(&probe);
            probe[k] = x[k] - h;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Exhaustive pair enumeration of the concordance index (hazard orientation).
/// Returns `None` when no pair is orderable.
pub fn brute_force_ci(risk: &[f64], times: &[f64], events: &[bool]) -> Option<f64> {
    let n = risk.len();
    let (mut hits, mut pairs) = (0u64, 0u64);
    for i in 0..n {
        for j in 0..n {
            let orderable =
                (events[i] && events[j] && times[i] < times[j]) || (events[i] && !events[j] && times[j] > times[i]);
            if orderable {
                pairs += 1;
                if risk[i] > risk[j] {
                    hits += 1;
                }
            }
        }
    }
    (pairs > 0).then(|| hits as f64 / pairs as f64)
}

/// Worst relative error `|a - b| / max(|a|, |b|, floor)` over paired entries.
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Random survival instance: times on a coarse grid so ties occur.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
    let risk = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let times = (0..n).map(|_| rng.gen_range(1..=n.max(2)) as f64 * 0.5).collect();
    let mut events: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
    if !events.iter().any(|e| *e) {
        events[0] = true;
    }
    (risk, times, events)
}
