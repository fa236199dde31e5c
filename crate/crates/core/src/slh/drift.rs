//! Symbolic Heisenberg-picture drift of system operators.

use super::expr::OperatorExpr;
use super::triple::SlhTriple;
use super::SlhError;

/// An additional damping channel not carried by the triple, such as a
/// mechanical bath.
#[derive(Clone, Debug)]
pub struct DissipationChannel {
    pub op: OperatorExpr,
    pub rate: f64,
}

/// `i[H, x] + Σ r (L† x L − ½{L†L, x})` over the triple's channels (rate 1)
/// and any extra channels.
pub fn heisenberg_drift(
    g: &SlhTriple,
    x: &OperatorExpr,
    extra: &[DissipationChannel],
) -> Result<OperatorExpr, SlhError> {
    let i = num_complex::Complex64::new(0.0, 1.0);
    let mut out = g.h().commutator(x)?.scale(i);
    let channels = g
        .l()
        .iter()
        .map(|l| (l, 1.0))
        .chain(extra.iter().map(|c| (&c.op, c.rate)));
    for (l, rate) in channels {
        let ld = l.dagger();
        let jump = ld.try_mul(x)?.try_mul(l)?;
        let ldl = ld.try_mul(l)?;
        let anti = &ldl.try_mul(x)? + &x.try_mul(&ldl)?;
        let term = &jump - &anti.scale_real(0.5);
        out = out.try_add(&term.scale_real(rate))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slh::modes::feedback_registry;
    use num_complex::Complex64;

    #[test]
    fn damped_oscillator_drift() {
        let reg = feedback_registry();
        let a = OperatorExpr::annihilation(&reg, 0);
        let h = OperatorExpr::number(&reg, 0).scale_real(2.0);
        let g = SlhTriple::single(a.scale_real(0.5f64.sqrt()), h).unwrap();
        let d = heisenberg_drift(&g, &a, &[]).unwrap();
        // -i ω a - (κ/2) a with ω = 2, κ = 0.5
        assert_eq!(d.len(), 1);
        assert!((d.coefficient_of(0, 0, 1) - Complex64::new(-0.25, -2.0)).norm() < 1e-15);
    }
}
