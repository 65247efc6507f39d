#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prosody_coref::detector::train::init_model;
use prosody_coref::detector::{CnnParams, CnnShape, EventKind, WordWindowMatrix};
use prosody_coref::metrics::{phi4, Partition, Span};
use prosody_coref::wav::AudioSignal;

pub fn sine(freq: f64, rate: u32, seconds: f64, amp: f64) -> AudioSignal {
    let n = (seconds * rate as f64) as usize;
    let samples = (0..n)
        .map(|i| (amp * (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin()) as f32)
        .collect();
    AudioSignal::new(samples, rate).unwrap()
}

/// Nuclear flags by definition: an accent with no later accent before the
/// phrase ends (at a boundary token, inclusive, or at the end).
pub fn naive_nuclear(accent: &[bool], boundary: &[bool]) -> Vec<bool> {
    let n = accent.len();
    (0..n)
        .map(|i| {
            if !accent[i] {
                return false;
            }
            let mut end = n - 1;
            for j in i..n {
                if boundary[j] {
                    end = j;
                    break;
                }
            }
            !(i + 1..=end).any(|j| accent[j])
        })
        .collect()
}

/// Best total φ4 similarity over all one-to-one chain alignments.
pub fn brute_force_ceaf(key: &Partition, response: &Partition) -> f64 {
    fn go(k: usize, key: &[Vec<Span>], resp: &[Vec<Span>], used: &mut Vec<bool>) -> f64 {
        if k == key.len() {
            return 0.0;
        }
        let mut best = go(k + 1, key, resp, used);
        for j in 0..resp.len() {
            if !used[j] {
                used[j] = true;
                best = best.max(phi4(&key[k], &resp[j]) + go(k + 1, key, resp, used));
                used[j] = false;
            }
        }
        best
    }
    go(
        0,
        &key.chains,
        &response.chains,
        &mut vec![false; response.chains.len()],
    )
}

/// A random partition of mentions `0..n` (as single-token spans) into at
/// most `max_chains` chains.
pub fn random_partition(rng: &mut ChaCha8Rng, mentions: &[usize], max_chains: usize) -> Partition {
    let k = rng.gen_range(1..=max_chains.min(mentions.len()).max(1));
    let mut chains: Vec<Vec<Span>> = vec![Vec::new(); k];
    for &m in mentions {
        chains[rng.gen_range(0..k)].push((m, m));
    }
    Partition::new(chains.into_iter().filter(|c| !c.is_empty()).collect()).unwrap()
}

pub const SMALL_SHAPE: CnnShape = CnnShape {
    rows: 6,
    width: 12,
    k1: 2,
    kw1: 6,
    k2: 2,
    kw2: 4,
};

fn flat(p: &CnnParams) -> Vec<f64> {
    p.tensors().iter().flat_map(|t| t.iter().copied()).collect()
}

fn set_flat(p: &mut CnnParams, i: usize, v: f64) {
    let mut i = i;
    for t in p.tensors_mut() {
        if i < t.len() {
            t[i] = v;
            return;
        }
        i -= t.len();
    }
    panic!("parameter index out of range");
}

/// Relative error ‖a − n‖ / (‖a‖ + ‖n‖) between the analytic gradient and
/// central finite differences with step `h`, for a random small model and
/// input drawn from `seed`.
pub fn gradient_relative_error(seed: u64, h: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = SMALL_SHAPE;
    let mut model = init_model(EventKind::Accent, shape, &mut rng);
    // larger weights than the training init so that every unit is active
    for t in model.params.tensors_mut() {
        t.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    }
    let mut x = WordWindowMatrix::zeros(shape.width);
    for v in x.values.iter_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    let gold = rng.gen_bool(0.5);

    let mut grad = CnnParams::zeros(&shape);
    model.backward(&x, gold, &mut grad, None).unwrap();
    let analytic = flat(&grad);

    let base = flat(&model.params);
    let mut numeric = vec![0.0; base.len()];
    for i in 0..base.len() {
        set_flat(&mut model.params, i, base[i] + h);
        let up = model.loss(&x, gold).unwrap();
        set_flat(&mut model.params, i, base[i] - h);
        let down = model.loss(&x, gold).unwrap();
        set_flat(&mut model.params, i, base[i]);
        numeric[i] = (up - down) / (2.0 * h);
    }
    let diff: f64 = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).powi(2))
        .sum::<f64>()
        .sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / (na + nn).max(1e-300)
}

/// Windows whose loudness row is shifted by +2 exactly for events.
pub fn separable_windows(n: usize, seed: u64) -> Vec<(WordWindowMatrix, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = prosody_coref::detector::W_MAX;
    (0..n)
        .map(|i| {
            let label = i % 3 == 0;
            let mut m = WordWindowMatrix::zeros(w);
            for r in 0..5 {
                for c in 0..w {
                    m.set(r, c, rng.gen_range(-1.0..1.0));
                }
            }
            let lo = w / 2 - 10;
            for c in lo..lo + 20 {
                m.set(5, c, 1.0);
                if label {
                    m.set(2, c, m.get(2, c) + 2.0);
                }
            }
            (m, label)
        })
        .collect()
}
