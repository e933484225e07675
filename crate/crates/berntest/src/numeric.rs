//! Small numeric helpers: compensated summation and binomial coefficients.
//!
//! Probability mass accumulated over thousands of assignments must not lose
//! precision to naive summation, so every probability total in this crate runs
//! through [`CompensatedSum`] (Neumaier's variant of Kahan summation, which
//! also handles terms larger than the running sum).

/// Streaming compensated accumulator (Neumaier / "improved Kahan–Babuška").
///
/// ```
/// use berntest::numeric::CompensatedSum;
///
/// let mut acc = CompensatedSum::new();
/// for _ in 0..10 {
///     acc.add(0.1);
/// }
/// assert_eq!(acc.value(), 1.0);
/// ```
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one term, tracking the rounding error of the addition.
    pub fn add(&mut self, term: f64) {
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.compensation += (self.sum - t) + term;
        } else {
            self.compensation += (term - t) + self.sum;
        }
        self.sum = t;
    }

    /// The compensated total.
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of an iterator of terms.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for t in terms {
        acc.add(t);
    }
    acc.value()
}

/// Binomial coefficient C(n, k) as an `f64`.
///
/// Uses the multiplicative formula with the smaller of `k` and `n - k`;
/// exact for every value representable without rounding (n ≤ 50 or so) and
/// accurate to f64 precision beyond that. Returns 0.0 when `k > n`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}
