//! Order-4 symlet filters derived by spectral factorization of the Daubechies
//! half-band polynomial.

use rustfft::num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilterBank {
    pub name: &'static str,
    /// Low-pass decomposition filter.
    pub h: Vec<f64>,
    /// High-pass decomposition filter.
    pub g: Vec<f64>,
    pub rec_h: Vec<f64>,
    pub rec_g: Vec<f64>,
}

/// Roots of a polynomial given by coefficients in ascending order (Durand-Kerner).
fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |z: Complex64| monic.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..deg).map(|i| seed.powu(i as u32)).collect();
    for _ in 0..500 {
        let mut delta: f64 = 0.0;
        for i in 0..deg {
            let denom = (0..deg)
                .filter(|&j| j != i)
                .fold(Complex64::new(1.0, 0.0), |acc, j| acc * (roots[i] - roots[j]));
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Real coefficients of `prod (1 - r z^-1)` times `(1 + z^-1)^order`, ascending powers of `z^-1`.
fn expand(zeros: &[Complex64], order: usize) -> Vec<f64> {
    let mut p = vec![Complex64::new(1.0, 0.0)];
    let mut mul = |r: Complex64| {
        let mut next = vec![Complex64::new(0.0, 0.0); p.len() + 1];
        for (i, c) in p.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        p = next;
    };
    for _ in 0..order {
        mul(Complex64::new(-1.0, 0.0));
    }
    for &r in zeros {
        mul(r);
    }
    p.iter().map(|c| c.re).collect()
}

/// Deviation of the filter's phase from the best-fitting straight line over (0, pi).
fn phase_nonlinearity(h: &[f64]) -> f64 {
    let samples = 256;
    let mut phases = Vec::with_capacity(samples);
    let mut prev = 0.0;
    let mut offset = 0.0;
    for s in 0..samples {
        // Stay clear of pi where the response vanishes.
        let w = 0.9 * std::f64::consts::PI * (s as f64 + 0.5) / samples as f64;
        let r: Complex64 = h
            .iter()
            .enumerate()
            .map(|(k, &c)| Complex64::from_polar(c, -w * k as f64))
            .sum();
        let mut ph = r.arg() + offset;
        if s > 0 {
            while ph - prev > std::f64::consts::PI {
                ph -= 2.0 * std::f64::consts::PI;
                offset -= 2.0 * std::f64::consts::PI;
            }
            while ph - prev < -std::f64::consts::PI {
                ph += 2.0 * std::f64::consts::PI;
                offset += 2.0 * std::f64::consts::PI;
            }
        }
        phases.push((w, ph));
        prev = ph;
    }
    let n = samples as f64;
    let (sx, sy) = phases.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let sxy: f64 = phases.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = phases.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    phases
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum::<f64>()
}

impl WaveletFilterBank {
    pub fn sym4() -> Self {
        Self::symlet(4)
    }

    /// Symlet with `p` vanishing moments (filter length `2p`).
    pub fn symlet(p: usize) -> Self {
        assert!((2..=8).contains(&p), "symlet order {p} not supported");
        let poly: Vec<f64> = (0..p).map(|k| binomial((p - 1 + k) as u64, k as u64)).collect();
        // Each root y of the half-band polynomial yields a reciprocal pair of zeros in z.
        let pairs: Vec<(Complex64, Complex64)> = if p == 1 {
            Vec::new()
        } else {
            poly_roots(&poly)
                .into_iter()
                .map(|y| {
                    let b = Complex64::new(2.0, 0.0) - 4.0 * y;
                    let disc = (b * b - 4.0).sqrt();
                    ((b + disc) / 2.0, (b - disc) / 2.0)
                })
                .collect()
        };
        // Group conjugate pairs so every choice yields a real filter.
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut used = vec![false; pairs.len()];
        for i in 0..pairs.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            let mut g = vec![i];
            if pairs[i].0.im.abs() > 1e-9 {
                let j = (0..pairs.len())
                    .filter(|&j| !used[j])
                    .min_by(|&a, &b| {
                        let da = (pairs[a].0 - pairs[i].0.conj()).norm().min((pairs[a].1 - pairs[i].0.conj()).norm());
                        let db = (pairs[b].0 - pairs[i].0.conj()).norm().min((pairs[b].1 - pairs[i].0.conj()).norm());
                        da.total_cmp(&db)
                    })
                    .expect("complex roots come in conjugate pairs");
                used[j] = true;
                g.push(j);
            }
            groups.push(g);
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0..(1usize << groups.len()) {
            let mut zeros = Vec::new();
            for (gi, g) in groups.iter().enumerate() {
                let inside = mask >> gi & 1 == 0;
                let first = if inside { pairs[g[0]].0 } else { pairs[g[0]].1 };
                zeros.push(first);
                if let Some(&j) = g.get(1) {
                    let (a, b) = pairs[j];
                    let target = first.conj();
                    zeros.push(if (a - target).norm() < (b - target).norm() { a } else { b });
                }
            }
            let h = expand(&zeros, p);
            let score = phase_nonlinearity(&h);
            if best.as_ref().is_none_or(|(s, _)| score < *s - 1e-12) {
                best = Some((score, h));
            }
        }
        let mut h = best.expect("at least one factorization").1;
        let energy: f64 = h.iter().map(|v| v * v).sum();
        let centroid: f64 = h.iter().enumerate().map(|(k, v)| k as f64 * v * v).sum::<f64>() / energy;
        if centroid > (h.len() - 1) as f64 / 2.0 {
            h.reverse();
        }
        let sum: f64 = h.iter().sum();
        let scale = std::f64::consts::SQRT_2 / sum;
        h.iter_mut().for_each(|v| *v *= scale);
        let len = h.len();
        let g: Vec<f64> = (0..len)
            .map(|k| if k % 2 == 0 { -h[len - 1 - k] } else { h[len - 1 - k] })
            .collect();
        let rec_h = h.iter().rev().copied().collect();
        let rec_g = g.iter().rev().copied().collect();
        Self {
            name: if p == 4 { "sym4" } else { "sym" },
            h,
            g,
            rec_h,
            rec_g,
        }
    }
}
