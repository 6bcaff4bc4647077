//! Numeric substrate: deterministic compensated summation, a fixed-chunk
//! parallel map/reduce whose results are bit-identical for any worker count,
//! closed-form antiderivatives, and a small seeded RNG for sampling.

/// Neumaier's variant of Kahan summation. Accumulates in a fixed order;
/// the result depends only on the sequence of `add` calls.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Fixed chunk length for deterministic reductions. Partial sums are formed
/// per chunk in index order and combined in chunk order, so the result is
/// independent of how chunks are distributed over workers.
const CHUNK: usize = 1024;

/// Deterministic sum of `f(i)` for `i in 0..len`.
///
/// With `workers <= 1` the chunks are evaluated inline; otherwise they are
/// distributed over scoped threads. Both paths produce bit-identical results.
pub fn det_sum<F>(len: usize, workers: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let n_chunks = len.div_ceil(CHUNK).max(1);
    let mut partials = vec![0.0_f64; n_chunks];
    let chunk_sum = |c: usize| {
        let lo = c * CHUNK;
        let hi = ((c + 1) * CHUNK).min(len);
        let mut acc = CompensatedSum::new();
        for i in lo..hi {
            acc.add(f(i));
        }
        acc.value()
    };
    if workers <= 1 || n_chunks == 1 {
        for (c, p) in partials.iter_mut().enumerate() {
            *p = chunk_sum(c);
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots: Vec<std::sync::Mutex<f64>> =
            (0..n_chunks).map(|_| std::sync::Mutex::new(0.0)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers.min(n_chunks) {
                scope.spawn(|| loop {
                    let c = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if c >= n_chunks {
                        break;
                    }
                    *slots[c].lock().unwrap() = chunk_sum(c);
                });
            }
        });
        for (c, p) in partials.iter_mut().enumerate() {
            *p = *slots[c].lock().unwrap();
        }
    }
    let mut total = CompensatedSum::new();
    for p in partials {
        total.add(p);
    }
    total.value()
}

/// Deterministic map of `f` over `0..len`. Values are pure per-index, so the
/// output does not depend on the worker count.
pub fn det_map<T, F>(len: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send + Default + Clone,
    F: Fn(usize) -> T + Sync,
{
    let mut out = vec![T::default(); len];
    if workers <= 1 || len < 2 * CHUNK {
        for (i, o) in out.iter_mut().enumerate() {
            *o = f(i);
        }
        return out;
    }
    let chunks: Vec<(usize, &mut [T])> = {
        let mut v = Vec::new();
        let mut rest = out.as_mut_slice();
        let mut base = 0;
        while !rest.is_empty() {
            let take = rest.len().min(CHUNK);
            let (head, tail) = rest.split_at_mut(take);
            v.push((base, head));
            base += take;
            rest = tail;
        }
        v
    };
    let work = std::sync::Mutex::new(chunks.into_iter());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let item = work.lock().unwrap().next();
                match item {
                    Some((base, slice)) => {
                        for (off, o) in slice.iter_mut().enumerate() {
                            *o = f(base + off);
                        }
                    }
                    None => break,
                }
            });
        }
    });
    out
}

/// Deterministic max of `f(i)` over `0..len`; `len` must be positive.
pub fn det_max<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    let mut m = f64::NEG_INFINITY;
    for i in 0..len {
        m = m.max(f(i));
    }
    m
}

/// Deterministic min of `f(i)` over `0..len`; `len` must be positive.
pub fn det_min<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    let mut m = f64::INFINITY;
    for i in 0..len {
        m = m.min(f(i));
    }
    m
}

/// Surface area of the unit m-sphere, |S^m| = 2π^{(m+1)/2}/Γ((m+1)/2),
/// by the recurrence |S^m| = 2π |S^{m-2}|/(m-1).
pub fn sphere_area(m: usize) -> f64 {
    match m {
        0 => 2.0,
        1 => std::f64::consts::TAU,
        _ => std::f64::consts::TAU * sphere_area(m - 2) / (m - 1) as f64,
    }
}

/// Antiderivative of cosh^n evaluated at `x` with value 0 at 0, by the
/// reduction formula ∫cosh^n = cosh^{n-1}x sinh x/n + (n-1)/n ∫cosh^{n-2}.
pub fn cosh_pow_antiderivative(n: usize, x: f64) -> f64 {
    match n {
        0 => x,
        1 => x.sinh(),
        _ => {
            (x.cosh().powi(n as i32 - 1) * x.sinh()
                + (n - 1) as f64 * cosh_pow_antiderivative(n - 2, x))
                / n as f64
        }
    }
}

/// Antiderivative of sin^m evaluated at `x` with value 0 at 0, by the
/// reduction formula ∫sin^m = -sin^{m-1}x cos x/m + (m-1)/m ∫sin^{m-2}.
pub fn sin_pow_antiderivative(m: usize, x: f64) -> f64 {
    match m {
        0 => x,
        1 => 1.0 - x.cos(),
        _ => {
            (-x.sin().powi(m as i32 - 1) * x.cos()
                + (m - 1) as f64 * sin_pow_antiderivative(m - 2, x))
                / m as f64
        }
    }
}

/// Binomial coefficient as f64; exact for the small arguments used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut num = 1.0_f64;
    let mut den = 1.0_f64;
    for i in 0..k {
        num *= (n - i) as f64;
        den *= (i + 1) as f64;
    }
    num / den
}

/// SplitMix64: a tiny deterministic RNG for sampling in tests and for seeded
/// initial-data generation.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        s.add(1e100);
        s.add(1.0);
        s.add(-1e100);
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn det_sum_is_worker_independent() {
        let data: Vec<f64> = (0..10_000)
            .map(|i| ((i as f64) * 0.7).sin() * 1e3_f64.powf(((i % 7) as f64 - 3.0) / 3.0))
            .collect();
        let s1 = det_sum(data.len(), 1, |i| data[i]);
        for workers in [2, 3, 8] {
            let s = det_sum(data.len(), workers, |i| data[i]);
            assert_eq!(s.to_bits(), s1.to_bits());
        }
    }

    #[test]
    fn det_map_is_worker_independent() {
        let f = |i: usize| ((i as f64) * 1.3).cos();
        let m1 = det_map(5000, 1, f);
        let m4 = det_map(5000, 4, f);
        assert_eq!(m1, m4);
    }

    #[test]
    fn sphere_areas_match_closed_forms() {
        assert!((sphere_area(2) - 4.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-13);
        assert!((sphere_area(5) - std::f64::consts::PI.powi(3)).abs() < 1e-13);
    }

    #[test]
    fn cosh_antiderivative_matches_quadrature() {
        // midpoint-rule oracle
        for n in 0..=6 {
            for &x in &[0.3_f64, 1.0, 2.0] {
                let m = 40_000;
                let dx = x / m as f64;
                let mut acc = CompensatedSum::new();
                for i in 0..m {
                    let s = (i as f64 + 0.5) * dx;
                    acc.add(s.cosh().powi(n as i32) * dx);
                }
                let diff = (cosh_pow_antiderivative(n, x) - acc.value()).abs();
                assert!(
                    diff < 1e-7 * (1.0 + acc.value().abs()),
                    "n={n} x={x} diff={diff}"
                );
            }
        }
    }

    #[test]
    fn sin_antiderivative_total_matches_sphere_area_ratio() {
        // |S^n| = |S^{n-1}| ∫_0^π sin^{n-1}
        for n in 2..=7 {
            let total = sin_pow_antiderivative(n - 1, std::f64::consts::PI);
            let ratio = sphere_area(n) / sphere_area(n - 1);
            assert!((total - ratio).abs() < 1e-13 * (1.0 + ratio));
        }
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(3, 2), 3.0);
        assert_eq!(binomial(6, 3), 20.0);
        assert_eq!(binomial(4, 0), 1.0);
        assert_eq!(binomial(2, 5), 0.0);
    }
}
