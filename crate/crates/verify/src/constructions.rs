//! Distributions used by the lower-bound constructions, and the closed forms
//! the checks compare against.

use num_traits::One;

use gft_core::dist::{Distribution, Piece};
use gft_core::error::Result;
use gft_core::scalar::{int, ratio, Rational};

fn pow(r: &Rational, e: usize) -> Rational {
    num_traits::pow(r.clone(), e)
}

/// Seller `{0 w.p. eps, 1 otherwise}`, buyer `{0 w.p. eps, 2 otherwise}`.
pub fn two_point_fsd_pair(eps: &Rational) -> Result<(Distribution, Distribution)> {
    Ok((
        Distribution::two_point(int(0), eps.clone(), int(1))?,
        Distribution::two_point(int(0), eps.clone(), int(2))?,
    ))
}

/// `OPT(1,1) = (1 - eps)(1 + eps)` for [`two_point_fsd_pair`].
pub fn two_point_opt_11(eps: &Rational) -> Rational {
    (int(1) - eps) * (int(1) + eps)
}

/// `BTR(1,2) = (1 - eps)(1 + 3 eps^2)` for [`two_point_fsd_pair`].
pub fn two_point_btr_12(eps: &Rational) -> Rational {
    (int(1) - eps) * (int(1) + int(3) * eps * eps)
}

/// Seller fair coin on {0, 1}, buyer fair coin on {0, 2}.
pub fn coin_pair() -> (Distribution, Distribution) {
    let half = ratio(1, 2);
    (
        Distribution::two_point(int(0), half.clone(), int(1)).unwrap(),
        Distribution::two_point(int(0), half, int(2)).unwrap(),
    )
}

/// `3p/2` with `p = 1 - 2^-n`: expected optimum with one seller and `n`
/// buyers for [`coin_pair`].
pub fn coin_opt(n: usize) -> Rational {
    let p = int(1) - pow(&ratio(1, 2), n);
    ratio(3, 2) * p
}

/// `3q/2` with `q = 1 - 2^-n - n 2^-n`.
pub fn coin_btr_closed_form(n: usize) -> Rational {
    let t = pow(&ratio(1, 2), n);
    let q = int(1) - &t - int(n as i64) * t;
    ratio(3, 2) * q
}

/// Buyer `{0 w.p. 1 - eps_tilde, 2}`, seller `{1 w.p. eps_tilde, 3}`.
pub fn no_fsd_pair(eps_tilde: &Rational) -> Result<(Distribution, Distribution)> {
    Ok((
        Distribution::two_point(int(1), eps_tilde.clone(), int(3))?,
        Distribution::two_point(int(0), int(1) - eps_tilde, int(2))?,
    ))
}

/// Seller point mass at `1/eps_tilde - 2`, buyer uniform on `[0, 1/eps_tilde]`.
pub fn regular_no_fsd_pair(eps_tilde: &Rational) -> Result<(Distribution, Distribution)> {
    let top = eps_tilde.recip();
    Ok((
        Distribution::point_mass(&top - int(2)),
        Distribution::uniform(int(0), top)?,
    ))
}

/// `OPT(1,1) = 2 eps_tilde` for [`regular_no_fsd_pair`].
pub fn regular_no_fsd_opt_11(eps_tilde: &Rational) -> Rational {
    int(2) * eps_tilde
}

/// Five-point distribution with median 1 used against the median mechanism.
pub fn median_distribution(delta: &Rational) -> Result<Distribution> {
    let d2 = pow(delta, 2);
    let d10 = pow(delta, 10);
    let half = ratio(1, 2);
    let side = &half - delta / int(2) - &d10;
    Distribution::discrete(vec![
        (int(0), delta / int(2)),
        (int(1) - &d2, side.clone()),
        (int(1), int(2) * &d10),
        (int(1) + &d2, side),
        (int(2), delta / int(2)),
    ])
}

/// Buyer: atom at 0 with mass `eps`, otherwise uniform on
/// `[1 + gamma - delta, 1 + gamma + delta]`. Seller: `{0 w.p. eps, 1}`.
pub fn sample_nohalf_pair(
    eps: &Rational,
    gamma: &Rational,
    delta: &Rational,
) -> Result<(Distribution, Distribution)> {
    let centre = int(1) + gamma;
    let buyer = Distribution::piecewise(vec![
        Piece {
            q_lo: int(0),
            q_hi: eps.clone(),
            v_lo: int(0),
            v_hi: int(0),
        },
        Piece {
            q_lo: eps.clone(),
            q_hi: Rational::one(),
            v_lo: &centre - delta,
            v_hi: &centre + delta,
        },
    ])?;
    Ok((Distribution::two_point(int(0), eps.clone(), int(1))?, buyer))
}

/// `OPT(1,1) = (1 - eps)(gamma + eps)` for [`sample_nohalf_pair`].
pub fn sample_nohalf_opt_11(eps: &Rational, gamma: &Rational) -> Rational {
    (int(1) - eps) * (gamma + eps)
}

/// Smallest integer `k >= ceil(4 sqrt(m))`.
pub fn four_sqrt_ceil(m: usize) -> usize {
    let target = 16 * m;
    (0..).find(|k| k * k >= target).unwrap()
}

/// Smallest `k >= 1` with `k(k - 1) / (m + k) >= 2`.
pub fn smallest_lemma_k(m: usize) -> usize {
    (1..).find(|&k| lemma_condition(m, k)).unwrap()
}

pub fn lemma_condition(m: usize, k: usize) -> bool {
    k * k.saturating_sub(1) >= 2 * (m + k)
}
