//! Closed-form exponent theory for weak-noise modulation-estimation.
//!
//! All rates and exponents are in nats per channel use. The optimal weak-noise
//! error cost exponent for the weighted `L_q` cost is
//! `E(gamma) = (q C(gamma) + sum_i a_i) / d`, attained by the rate split
//! `R_i = C/d + (mean(a) - a_i) / q` under which every coordinate contributes
//! the same exponent `a_i + q R_i`.

use crate::error::{invalid, Error, Result};
use crate::num::{boundary_slack, from_usize, lit, Real};

/// Power-limited AWGN channel: signal power `P` per dimension and noise variance `sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec<T> {
    power: T,
    noise_variance: T,
}

impl<T: Real> ChannelSpec<T> {
    /// `power` may be zero (a silent transmitter, `gamma = 0`); the noise variance must be positive.
    pub fn new(power: T, noise_variance: T) -> Result<Self> {
        if !(power.is_finite() && power >= T::zero()) {
            return Err(invalid(format!("power must be finite and >= 0, got {power}")));
        }
        if !(noise_variance.is_finite() && noise_variance > T::zero()) {
            return Err(invalid(format!(
                "noise variance must be finite and > 0, got {noise_variance}"
            )));
        }
        Ok(ChannelSpec { power, noise_variance })
    }

    /// Channel with unit noise variance and power equal to `gamma`.
    pub fn from_snr(gamma: T) -> Result<Self> {
        Self::new(gamma, T::one())
    }

    pub fn power(&self) -> T {
        self.power
    }

    pub fn noise_variance(&self) -> T {
        self.noise_variance
    }

    /// Signal-to-noise ratio `P / sigma^2`.
    pub fn gamma(&self) -> T {
        self.power / self.noise_variance
    }

    pub fn capacity(&self) -> T {
        capacity_from_snr(self.gamma())
    }
}

/// Weighted `L_q` error cost `rho(eps) = sum_i exp(-n a_i) |eps_i|^q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCostSpec<T> {
    q: T,
    a: Vec<T>,
    n: u32,
    weights: Vec<T>,
}

impl<T: Real> ErrorCostSpec<T> {
    pub fn new(q: T, a: Vec<T>, n: u32) -> Result<Self> {
        if !(q.is_finite() && q >= T::one()) {
            return Err(invalid(format!("cost power q must be >= 1, got {q}")));
        }
        if a.is_empty() {
            return Err(invalid("error cost needs at least one exponent a_i"));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(invalid("exponents a_i must be finite"));
        }
        if n == 0 {
            return Err(invalid("block length n must be positive"));
        }
        let nn: T = lit(f64::from(n));
        let weights = a.iter().map(|&ai| (-nn * ai).exp()).collect();
        Ok(ErrorCostSpec { q, a, n, weights })
    }

    pub fn q(&self) -> T {
        self.q
    }

    pub fn a(&self) -> &[T] {
        &self.a
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Weights `W_i = exp(-n a_i)`.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Same cost shape realized at another block length.
    pub fn at_block_length(&self, n: u32) -> Result<Self> {
        Self::new(self.q, self.a.clone(), n)
    }

    /// Evaluates `rho(eps)`.
    ///
    /// Panics if `eps.len() != self.dim()`.
    pub fn cost(&self, eps: &[T]) -> T {
        assert_eq!(eps.len(), self.dim(), "error vector dimension");
        eps.iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&e, &w)| acc + w * e.abs().powf(self.q))
    }

    fn sum_a(&self) -> T {
        self.a.iter().fold(T::zero(), |acc, &x| acc + x)
    }

    fn mean_a(&self) -> T {
        self.sum_a() / from_usize(self.dim())
    }
}

/// Per-component rates `R_1..R_d` in nats per channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct RateAssignment<T> {
    pub rates: Vec<T>,
}

impl<T: Real> RateAssignment<T> {
    pub fn total(&self) -> T {
        self.rates.iter().fold(T::zero(), |acc, &r| acc + r)
    }
}

/// AWGN capacity `C = ln(1 + gamma) / 2`.
pub fn awgn_capacity<T: Real>(channel: &ChannelSpec<T>) -> T {
    channel.capacity()
}

/// Capacity for a raw SNR value.
pub fn capacity_from_snr<T: Real>(gamma: T) -> T {
    gamma.ln_1p() / lit(2.0)
}

/// Left and right side of the A.1 feasibility inequality `d max(a) - sum(a) <= q C`.
fn a1_sides<T: Real>(ecf: &ErrorCostSpec<T>, channel: &ChannelSpec<T>) -> (T, T) {
    let d: T = from_usize(ecf.dim());
    let max_a = ecf.a.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
    let lhs = d * max_a - ecf.sum_a();
    let rhs = ecf.q * channel.capacity();
    (lhs, rhs)
}

/// True iff the exponent parameters admit a nonnegative even-contribution rate split.
/// Equality counts as satisfied, up to [`boundary_slack`].
pub fn check_assumption_a1<T: Real>(ecf: &ErrorCostSpec<T>, channel: &ChannelSpec<T>) -> bool {
    let (lhs, rhs) = a1_sides(ecf, channel);
    lhs <= rhs + boundary_slack::<T>() * T::one().max(rhs.abs())
}

fn require_a1<T: Real>(ecf: &ErrorCostSpec<T>, channel: &ChannelSpec<T>) -> Result<()> {
    if check_assumption_a1(ecf, channel) {
        Ok(())
    } else {
        let (lhs, rhs) = a1_sides(ecf, channel);
        Err(Error::A1Violated {
            lhs: lhs.to_f64().unwrap_or(f64::NAN),
            rhs: rhs.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// Optimal weak-noise error cost exponent `(q C + sum a) / d`.
pub fn weak_noise_exponent<T: Real>(ecf: &ErrorCostSpec<T>, channel: &ChannelSpec<T>) -> Result<T> {
    require_a1(ecf, channel)?;
    Ok((ecf.q * channel.capacity() + ecf.sum_a()) / from_usize(ecf.dim()))
}

/// Rate split under which every `a_i + q R_i` equals the optimal exponent.
pub fn optimal_rates<T: Real>(
    ecf: &ErrorCostSpec<T>,
    channel: &ChannelSpec<T>,
) -> Result<RateAssignment<T>> {
    require_a1(ecf, channel)?;
    let base = channel.capacity() / from_usize(ecf.dim());
    let mean = ecf.mean_a();
    // rounding at the A.1 boundary can leave -1e-17 style residue
    let rates = ecf
        .a
        .iter()
        .map(|&ai| (base + (mean - ai) / ecf.q).max(T::zero()))
        .collect();
    Ok(RateAssignment { rates })
}

/// Grid maximizer of `min_i (a_i + q R_i)` over the rate simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    pub value: T,
    pub rates: Vec<T>,
}

pub const ORACLE_MAX_DIM: usize = 4;

/// Brute-force sup-min over the uniform grid `R_i = C k_i / N`, `sum k_i <= N`.
///
/// The objective is nondecreasing in every rate, so for each prefix `k_1..k_{d-1}`
/// the best last coordinate is found directly instead of enumerated. Ties go to the
/// lexicographically smallest rate tuple.
pub fn supmin_oracle<T: Real>(
    ecf: &ErrorCostSpec<T>,
    channel: &ChannelSpec<T>,
    grid_steps: usize,
) -> Result<OracleResult<T>> {
    let d = ecf.dim();
    if d > ORACLE_MAX_DIM {
        return Err(Error::DimensionTooLarge { d, max: ORACLE_MAX_DIM });
    }
    if grid_steps < 10 {
        return Err(invalid(format!("grid_steps must be >= 10, got {grid_steps}")));
    }
    let steps = grid_steps;
    let cap = channel.capacity();
    let q = ecf.q;
    let a = &ecf.a;
    let rate = |k: usize| -> T {
        if k == steps {
            cap
        } else {
            cap * from_usize::<T>(k) / from_usize(steps)
        }
    };
    let last_a = a[d - 1];
    let last_value = |k: usize| last_a + q * rate(k);

    let mut prefix = vec![0usize; d - 1];
    let mut best: Option<(T, Vec<usize>)> = None;
    loop {
        let used: usize = prefix.iter().sum();
        let prefix_min = prefix
            .iter()
            .zip(a)
            .fold(T::infinity(), |m, (&k, &ai)| m.min(ai + q * rate(k)));
        let remaining = steps - used;
        let top = last_value(remaining);
        let value = prefix_min.min(top);
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            // smallest last index still reaching `value`
            let k_last = if top <= prefix_min {
                remaining
            } else {
                let (mut lo, mut hi) = (0usize, remaining);
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if last_value(mid) >= value {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                lo
            };
            let mut ks = prefix.clone();
            ks.push(k_last);
            best = Some((value, ks));
        }
        if !advance_prefix(&mut prefix, steps) {
            break;
        }
    }
    let (value, ks) = best.expect("grid has at least one point");
    Ok(OracleResult {
        value,
        rates: ks.into_iter().map(rate).collect(),
    })
}

/// Lexicographic odometer over tuples with `sum <= limit`. Returns false when exhausted.
fn advance_prefix(prefix: &mut [usize], limit: usize) -> bool {
    let mut pos = prefix.len();
    while pos > 0 {
        pos -= 1;
        prefix[pos] += 1;
        if prefix.iter().sum::<usize>() <= limit {
            return true;
        }
        prefix[pos] = 0;
    }
    false
}

/// Gaussian tail `Q(s) = P(N(0,1) > s)`, via `erfc(s / sqrt 2) / 2`.
///
/// The complementary error function is evaluated in `f64` (musl `erfc`, relative
/// error near 1 ulp over the whole line), so the result carries at least 12
/// significant digits for `f64` and full precision for `f32`.
pub fn q_function<T: Real>(s: T) -> T {
    let s = s.to_f64().unwrap_or(f64::NAN);
    lit(0.5 * libm::erfc(s / std::f64::consts::SQRT_2))
}

/// Finite-n lower bound on the sup weak-noise cost of any two-parameter system
/// whose outage probability stays below `delta_n`:
///
/// `2 rho(1/(2M_u), 1/(2M_v)) (1 - 1/M_u - 1/M_v) [Q(L / (2 sigma (M_u M_v - M_u - M_v))) - delta_n]_+`
///
/// where `L` is the total signal-locus length along the scan diagonals.
pub fn finite_n_converse_bound<T: Real>(
    ecf: &ErrorCostSpec<T>,
    m_u: usize,
    m_v: usize,
    sigma: T,
    total_locus_length: T,
    delta_n: T,
) -> Result<T> {
    if ecf.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: ecf.dim() });
    }
    if m_u < 2 || m_v < 2 {
        return Err(invalid(format!("grid sizes must be >= 2, got ({m_u}, {m_v})")));
    }
    if !(total_locus_length >= T::zero()) {
        return Err(invalid("locus length must be >= 0"));
    }
    if !(delta_n >= T::zero() && delta_n <= T::one()) {
        return Err(invalid(format!("delta_n must lie in [0, 1], got {delta_n}")));
    }
    if !(sigma >= T::zero()) {
        return Err(invalid("noise standard deviation must be >= 0"));
    }
    let interior = m_u as i64 * m_v as i64 - m_u as i64 - m_v as i64;
    if interior <= 0 {
        return Err(Error::DegenerateGrid { value: interior });
    }
    let mu: T = from_usize(m_u);
    let mv: T = from_usize(m_v);
    let two: T = lit(2.0);
    let half_step = ecf.cost(&[T::one() / (two * mu), T::one() / (two * mv)]);
    let grid_factor = T::one() - T::one() / mu - T::one() / mv;
    let arg = if total_locus_length == T::zero() {
        T::zero()
    } else if sigma == T::zero() {
        T::infinity()
    } else {
        let interior: T = lit(interior as f64);
        total_locus_length / (two * sigma * interior)
    };
    let tail = (q_function(arg) - delta_n).max(T::zero());
    Ok(two * half_step * grid_factor * tail)
}

/// Which converse is tighter for the orthogonal two-user structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindingBound {
    /// Generic two-parameter bound at the sum SNR.
    Generic,
    /// Each parameter treated alone, the other one genie-known.
    Individual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacBounds<T> {
    pub generic_exponent: T,
    pub individual_exponent: T,
    pub binding: BindingBound,
}

/// Exponent upper bounds for `f(u1, u2) = f1(u1) + f2(u2)` with orthogonal components
/// of SNRs `gamma1`, `gamma2` and `a_1 = a_2 = 0`. The smaller exponent is binding;
/// ties go to the individual bound.
pub fn mac_structured_bounds<T: Real>(q: T, gamma1: T, gamma2: T) -> MacBounds<T> {
    let generic_exponent = q * capacity_from_snr(gamma1 + gamma2) / lit(2.0);
    let individual_exponent = q * capacity_from_snr(gamma1).min(capacity_from_snr(gamma2));
    let binding = if generic_exponent < individual_exponent {
        BindingBound::Generic
    } else {
        BindingBound::Individual
    };
    MacBounds { generic_exponent, individual_exponent, binding }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const E2M1: f64 = 6.38905609893065; // e^2 - 1

    fn ecf(q: f64, a: &[f64]) -> ErrorCostSpec<f64> {
        ErrorCostSpec::new(q, a.to_vec(), 10).unwrap()
    }

    fn ch(gamma: f64) -> ChannelSpec<f64> {
        ChannelSpec::from_snr(gamma).unwrap()
    }

    #[test]
    fn capacity_examples() {
        assert_eq!(awgn_capacity(&ch(0.0)), 0.0);
        assert_relative_eq!(awgn_capacity(&ch(E2M1)), 1.0, epsilon = 1e-14);
        assert_relative_eq!(awgn_capacity(&ch(1.0)), 0.346_573_590_279_972_65, epsilon = 1e-15);
    }

    #[test]
    fn capacity_from_power_and_noise() {
        let c = ChannelSpec::new(3.0_f64, 2.0).unwrap();
        assert_eq!(c.gamma(), 1.5);
        assert_relative_eq!(c.capacity(), 0.5 * 2.5_f64.ln(), epsilon = 1e-15);
        assert!(ChannelSpec::new(1.0_f64, 0.0).is_err());
        assert!(ChannelSpec::new(-1.0_f64, 1.0).is_err());
    }

    #[test]
    fn a1_examples() {
        assert!(check_assumption_a1(&ecf(1.0, &[5.0]), &ch(0.0)));
        assert!(check_assumption_a1(&ecf(1.0, &[1.0, 0.0]), &ch(E2M1)));
        assert!(!check_assumption_a1(&ecf(1.0, &[2.0, 0.0]), &ch(E2M1)));
    }

    #[test]
    fn exponent_examples() {
        let e = weak_noise_exponent(&ecf(2.0, &[0.0]), &ch(3.0)).unwrap();
        assert_relative_eq!(e, 2.0 * capacity_from_snr(3.0), epsilon = 1e-15);
        let e = weak_noise_exponent(&ecf(2.0, &[0.2, 0.0]), &ch(E2M1)).unwrap();
        assert_relative_eq!(e, 1.1, epsilon = 1e-13);
        let shifted = weak_noise_exponent(&ecf(2.0, &[0.7, 0.5]), &ch(E2M1)).unwrap();
        assert_relative_eq!(shifted - e, 0.5, epsilon = 1e-13);
        assert!(matches!(
            weak_noise_exponent(&ecf(1.0, &[2.0, 0.0]), &ch(E2M1)),
            Err(Error::A1Violated { .. })
        ));
    }

    #[test]
    fn rate_examples() {
        let r = optimal_rates(&ecf(1.5, &[0.1, 0.1, 0.1]), &ch(4.0)).unwrap();
        for &x in &r.rates {
            assert_relative_eq!(x, capacity_from_snr(4.0) / 3.0, epsilon = 1e-15);
        }
        let r = optimal_rates(&ecf(2.0, &[0.2, 0.0]), &ch(E2M1)).unwrap();
        assert_relative_eq!(r.rates[0], 0.45, epsilon = 1e-13);
        assert_relative_eq!(r.rates[1], 0.55, epsilon = 1e-13);
        let (au, av) = (0.3, -0.1);
        let r = optimal_rates(&ecf(1.0, &[au, av]), &ch(E2M1)).unwrap();
        assert_relative_eq!(r.rates[0], 0.5 + (av - au) / 2.0, epsilon = 1e-13);
        // boundary of A.1: one rate is exactly zero
        let r = optimal_rates(&ecf(1.0, &[1.0, 0.0]), &ch(E2M1)).unwrap();
        assert!(r.rates[0].abs() < 1e-12);
        assert!(optimal_rates(&ecf(1.0, &[2.0, 0.0]), &ch(E2M1)).is_err());
    }

    #[test]
    fn oracle_examples() {
        let e = ecf(2.0, &[0.3]);
        let o = supmin_oracle(&e, &ch(5.0), 50).unwrap();
        assert_eq!(o.value, 0.3 + 2.0 * capacity_from_snr(5.0));
        assert_eq!(o.rates, vec![capacity_from_snr(5.0)]);

        let o = supmin_oracle(&ecf(2.0, &[0.2, 0.0]), &ch(E2M1), 2000).unwrap();
        assert!(o.value <= 1.1 + 1e-12);
        assert!((o.value - 1.1).abs() <= 2.0 * 2.0 / 2000.0);

        let bad = ecf(1.0, &[2.0, 0.0]);
        let o = supmin_oracle(&bad, &ch(E2M1), 200).unwrap();
        let closed = (1.0 * 1.0 + 2.0) / 2.0;
        assert!(o.value < closed);
    }

    #[test]
    fn oracle_tie_break_is_lexicographic() {
        // C = 0: every grid point scores min(a); the all-zero tuple must win.
        let o = supmin_oracle(&ecf(1.0, &[0.1, 0.2, 0.3]), &ch(0.0), 10).unwrap();
        assert_eq!(o.rates, vec![0.0, 0.0, 0.0]);
        assert_relative_eq!(o.value, 0.1);
        // a_2 far above: optimum puts everything on R_1, R_2 = 0 suffices
        let o = supmin_oracle(&ecf(1.0, &[0.0, 10.0]), &ch(E2M1), 20).unwrap();
        assert_relative_eq!(o.value, 1.0, epsilon = 1e-14);
        assert_relative_eq!(o.rates[0], 1.0, epsilon = 1e-14);
        assert_eq!(o.rates[1], 0.0);
    }

    #[test]
    fn oracle_rejects_bad_input() {
        assert!(matches!(
            supmin_oracle(&ecf(1.0, &[0.0; 5]), &ch(1.0), 20),
            Err(Error::DimensionTooLarge { d: 5, .. })
        ));
        assert!(supmin_oracle(&ecf(1.0, &[0.0]), &ch(1.0), 9).is_err());
    }

    #[test]
    fn q_function_examples() {
        assert_eq!(q_function(0.0_f64), 0.5);
        assert_eq!(q_function(f64::INFINITY), 0.0);
        assert!(q_function(40.0_f64) < 1e-300);
        assert_relative_eq!(q_function(1.0_f64), 0.158_655_253_931_457_05, max_relative = 1e-13);
        assert_relative_eq!(q_function(-1.0_f64), 1.0 - 0.158_655_253_931_457_05, max_relative = 1e-13);
        assert_relative_eq!(q_function(1.0_f32), 0.158_655_26, max_relative = 1e-6);
    }

    #[test]
    fn converse_bound_examples() {
        let e = ecf(1.0, &[0.0, 0.0]);
        assert_eq!(finite_n_converse_bound(&e, 4, 4, 1.0, 3.0, 0.5).unwrap(), 0.0);
        assert_eq!(finite_n_converse_bound(&e, 4, 4, 1.0, 0.0, 0.7).unwrap(), 0.0);
        assert_eq!(finite_n_converse_bound(&e, 4, 4, 1.0, 0.0, 0.0).unwrap(), 0.125);
        assert!(matches!(
            finite_n_converse_bound(&e, 2, 2, 1.0, 0.0, 0.0),
            Err(Error::DegenerateGrid { value: 0 })
        ));
        assert!(matches!(
            finite_n_converse_bound(&ecf(1.0, &[0.0]), 4, 4, 1.0, 0.0, 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(finite_n_converse_bound(&e, 4, 4, 1.0, 0.0, 1.5).is_err());
    }

    #[test]
    fn converse_bound_noiseless_long_locus_vanishes() {
        let e = ecf(1.0, &[0.0, 0.0]);
        assert_eq!(finite_n_converse_bound(&e, 4, 4, 0.0, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(finite_n_converse_bound(&e, 4, 4, 0.0, 0.0, 0.0).unwrap(), 0.125);
    }

    #[test]
    fn mac_examples() {
        let m = mac_structured_bounds(2.0, 3.0, 3.0);
        assert!(m.generic_exponent <= m.individual_exponent);
        assert_eq!(m.binding, BindingBound::Generic);

        let m = mac_structured_bounds(1.0, 15.0, 0.1);
        assert_relative_eq!(m.individual_exponent, 0.047_655_089_902_162_47, epsilon = 1e-15);
        assert_relative_eq!(m.generic_exponent, 0.694_704_817_997_604_35, epsilon = 1e-15);
        assert_eq!(m.binding, BindingBound::Individual);

        let m = mac_structured_bounds(1.0, 4.0, 0.0);
        assert_eq!(m.individual_exponent, 0.0);
        assert_eq!(m.binding, BindingBound::Individual);
    }

    #[test]
    fn ecf_cost_basics() {
        let e = ErrorCostSpec::new(2.0, vec![0.1, -0.2], 5).unwrap();
        assert_eq!(e.cost(&[0.0, 0.0]), 0.0);
        assert_relative_eq!(e.weights()[0], (-0.5_f64).exp());
        assert_relative_eq!(e.cost(&[0.5, -1.0]), 0.25 * (-0.5_f64).exp() + (1.0_f64).exp());
        assert_eq!(e.cost(&[0.3, -0.4]), e.cost(&[-0.3, 0.4]));
        assert!(ErrorCostSpec::new(0.5, vec![0.0], 1).is_err());
        assert!(ErrorCostSpec::<f64>::new(1.0, vec![], 1).is_err());
        assert!(ErrorCostSpec::new(1.0, vec![0.0], 0).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let e = ErrorCostSpec::new(2.0_f32, vec![0.2, 0.0], 4).unwrap();
        let c = ChannelSpec::from_snr(E2M1 as f32).unwrap();
        let r = optimal_rates(&e, &c).unwrap();
        assert!((r.rates[0] - 0.45).abs() < 1e-5);
        assert!((weak_noise_exponent(&e, &c).unwrap() - 1.1).abs() < 1e-5);
    }
}
