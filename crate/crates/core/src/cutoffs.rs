//! Concrete smooth cutoffs and the dyadic partitions built from them.
//!
//! psi == 1 on [-1,1], supp psi in [-2,2]; phi(t) = psi(t) - psi(2t) with
//! supp phi in {1/2 <= |t| <= 2}; eta_c == 1 on [-1/2,1/2], supp in
//! [-3/4,3/4]; beta(t) = eta_c(t) - eta_c(2t) with supp in
//! {1/4 <= |t| <= 3/4}. All built from the e^{-1/x} step, so the telescoping
//! identities hold exactly (up to rounding).

use crate::error::{Error, Result};

/// Smooth step: 0 for t <= 0, 1 for t >= 1, e^{-1/t}/(e^{-1/t}+e^{-1/(1-t)}) between.
pub fn step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let e1 = (-1.0 / t).exp();
        let e2 = (-1.0 / (1.0 - t)).exp();
        e1 / (e1 + e2)
    }
}

pub fn psi(t: f64) -> f64 {
    step((4.0 - t * t) / 3.0)
}

pub fn phi(t: f64) -> f64 {
    psi(t) - psi(2.0 * t)
}

pub fn psi_c(t: f64) -> f64 {
    1.0 - psi(t)
}

pub fn eta_c(t: f64) -> f64 {
    step((9.0 / 16.0 - t * t) / (5.0 / 16.0))
}

pub fn beta(t: f64) -> f64 {
    eta_c(t) - eta_c(2.0 * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cutoff {
    Psi,
    Phi,
    PsiC,
    EtaC,
    Beta,
}

pub fn eval_cutoff(which: Cutoff, t: f64) -> f64 {
    match which {
        Cutoff::Psi => psi(t),
        Cutoff::Phi => phi(t),
        Cutoff::PsiC => psi_c(t),
        Cutoff::EtaC => eta_c(t),
        Cutoff::Beta => beta(t),
    }
}

/// Sum_{l=-L..L} phi(t/2^l). Telescopes to psi(t/2^L) - psi(2^{L+1} t),
/// hence equals 1 for 2^{-L} <= |t| <= 2^L.
pub fn partition_check(t: f64, bigl: i32) -> Result<f64> {
    if t == 0.0 {
        return Err(Error::InvalidParameter(
            "partition identity fails at t = 0".into(),
        ));
    }
    let mut acc = 0.0;
    for l in -bigl..=bigl {
        acc += phi(t * (-l as f64).exp2());
    }
    Ok(acc)
}

/// Deviation of the partial sum from its telescoped closed form,
/// |Sum_l phi(t/2^l) - (psi(2^-L t) - psi(2^{L+1} t))|; exact telescoping
/// means this is at rounding level for every t != 0.
pub fn partition_deviation(t: f64, bigl: i32) -> Result<f64> {
    let sum = partition_check(t, bigl)?;
    let closed = psi((-bigl as f64).exp2() * t) - psi(((bigl + 1) as f64).exp2() * t);
    Ok((sum - closed).abs())
}

/// Sum_{s=0..S} beta(2^s x) = eta_c(x) - eta_c(2^{S+1} x).
pub fn beta_telescope(x: f64, bigs: u32) -> f64 {
    (0..=bigs).map(|s| beta((s as f64).exp2() * x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_and_support() {
        assert_eq!(psi(0.5), 1.0);
        assert_eq!(psi(-1.0), 1.0);
        assert_eq!(psi(2.0), 0.0);
        assert_eq!(phi(3.0), 0.0);
        assert_eq!(phi(0.4), 0.0); // below 1/2
        assert!(phi(1.0) > 0.0);
        assert_eq!(eta_c(0.5), 1.0);
        assert_eq!(eta_c(0.75), 0.0);
        assert_eq!(beta(0.2), 0.0);
        assert_eq!(beta(0.8), 0.0);
        assert!(beta(0.5) > 0.0);
    }

    #[test]
    fn psi_plus_complement() {
        for &t in &[-3.0, -1.2, 0.0, 0.7, 1.5, 2.5] {
            assert!((psi(t) + psi_c(t) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn partition_examples() {
        assert!((partition_check(1.0, 10).unwrap() - 1.0).abs() < 1e-14);
        assert!((partition_check(-1.37, 10).unwrap() - 1.0).abs() < 1e-14);
        // out of window: remainder is psi(2^2) = 0
        assert!(partition_check(4096.0, 10).unwrap().abs() < 1e-14);
        assert!(partition_check(0.0, 10).is_err());
    }

    #[test]
    fn telescoping_exact() {
        for &t in &[0.3, 0.9, 1.5, -2.3, 700.0] {
            let lhs = partition_check(t, 12).unwrap();
            let rhs = psi(t / 4096.0) - psi(8192.0 * t);
            assert!((lhs - rhs).abs() < 1e-14, "t={t}");
        }
        for &x in &[0.1, 0.3, -0.6, 0.9] {
            let lhs = beta_telescope(x, 8);
            let rhs = eta_c(x) - eta_c(512.0 * x);
            assert!((lhs - rhs).abs() < 1e-14, "x={x}");
        }
    }
}
