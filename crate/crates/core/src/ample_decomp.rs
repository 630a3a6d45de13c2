//! Positive-degree ℚ-divisors on ℙ¹ as positive combinations of ample
//! (positive-degree, integral) divisors.
//!
//! Induction on the negative points: with D' = D + |n_r|P_r = Σ a_i D_i,
//! D = Σ (a_i − |n_r|λ_i) D_i + |n_r|(Σ λ_i D_i − P_r), which needs
//! λ_i < a_i/|n_r| and Σ λ_i deg D_i > deg P_r. We take the uniform choice
//! λ_i = τ a_i/|n_r| with τ = (1 + |n_r| deg P_r / deg D')/2, strictly
//! inside both bounds.

use num::{BigInt, Integer, One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::divisor_series::{Point, RDivisorP1};
use crate::error::{Error, Result};
use crate::exact::{self, Q};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplePart {
    #[serde(with = "exact::qstr")]
    pub coefficient: Q,
    pub divisor: RDivisorP1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmpleDecomposition {
    pub parts: Vec<AmplePart>,
}

impl Serialize for AmpleDecomposition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            parts: &'a [AmplePart],
        }
        Repr { parts: &self.parts }.serialize(s)
    }
}

impl AmpleDecomposition {
    pub fn sum(&self) -> RDivisorP1 {
        self.parts.iter().fold(RDivisorP1::default(), |acc, p| acc.add(&p.divisor.scale(&p.coefficient)))
    }

    /// Exact reconstruction, positive coefficients and ample integral parts.
    pub fn verify(&self, d: &RDivisorP1) -> bool {
        self.sum() == *d
            && self.parts.iter().all(|p| p.coefficient.is_positive() && p.divisor.is_integral() && ample_test(&p.divisor) == Ok(true))
    }
}

/// On a curve an integral divisor is ample iff its degree is positive.
pub fn ample_test(d: &RDivisorP1) -> Result<bool> {
    if !d.is_integral() {
        return Err(Error::NonIntegral(format!("{}", serde_json::to_string(d).unwrap_or_default())));
    }
    Ok(d.degree().is_positive())
}

pub fn decompose_ample(d: &RDivisorP1) -> Result<AmpleDecomposition> {
    if !d.degree().is_positive() {
        return Err(Error::NonPositiveDegree(exact::fmt_q(&d.degree())));
    }
    let mut negative: Vec<(Point, Q)> = d.terms().filter(|(_, c)| c.is_negative()).map(|(p, c)| (p.clone(), c.clone())).collect();
    // n₁ ≥ … ≥ n_r; the most negative point is removed first
    negative.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let positive = RDivisorP1::new(d.terms().filter(|(_, c)| c.is_positive()).map(|(p, c)| (p.clone(), c.clone())));
    Ok(AmpleDecomposition { parts: build(&positive, &negative) })
}

fn build(positive: &RDivisorP1, negative: &[(Point, Q)]) -> Vec<AmplePart> {
    let Some(((pr, nr), rest)) = negative.split_last() else {
        return positive
            .terms()
            .map(|(p, c)| AmplePart { coefficient: c.clone(), divisor: RDivisorP1::point(p.clone(), Q::one()) })
            .collect();
    };
    let inner = build(positive, rest);
    let m = nr.abs();
    let deg_p = exact::q(pr.degree() as i64);
    let s: Q = inner.iter().map(|p| &p.coefficient * p.divisor.degree()).sum();
    let tau = (Q::one() + &m * &deg_p / &s) / exact::q(2);
    let lambdas: Vec<Q> = inner.iter().map(|p| &tau * &p.coefficient / &m).collect();
    let den = lambdas.iter().fold(BigInt::one(), |acc, l| acc.lcm(l.denom()));
    let nq = Q::from_integer(den);
    let mut last = RDivisorP1::point(pr.clone(), -nq.clone());
    let mut parts = Vec::with_capacity(inner.len() + 1);
    for (p, l) in inner.into_iter().zip(&lambdas) {
        last = last.add(&p.divisor.scale(&(l * &nq)));
        parts.push(AmplePart { coefficient: &p.coefficient - &m * l, divisor: p.divisor });
    }
    parts.retain(|p| !p.coefficient.is_zero());
    parts.push(AmplePart { coefficient: &m / &nq, divisor: last });
    parts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q, qf};
    use proptest::prelude::*;

    fn lin(a: i64) -> Point {
        Point::linear(q(a))
    }

    #[test]
    fn ample_test_examples() {
        assert_eq!(ample_test(&RDivisorP1::point(Point::Infinity, q(1))), Ok(true));
        assert_eq!(ample_test(&RDivisorP1::new([(Point::t(), q(1)), (Point::Infinity, q(-1))])), Ok(false));
        assert_eq!(ample_test(&RDivisorP1::new([(lin(1), q(2)), (Point::Infinity, q(-3))])), Ok(false));
        assert!(matches!(ample_test(&RDivisorP1::point(Point::Infinity, qf(1, 2))), Err(Error::NonIntegral(_))));
    }

    #[test]
    fn decomposition_examples() {
        let d = RDivisorP1::point(lin(1), q(3));
        let r = decompose_ample(&d).unwrap();
        assert_eq!(r.parts, vec![AmplePart { coefficient: q(3), divisor: RDivisorP1::point(lin(1), q(1)) }]);

        let d = RDivisorP1::new([(lin(1), q(3)), (lin(2), q(-1))]);
        let r = decompose_ample(&d).unwrap();
        assert!(r.verify(&d));
        let expect = vec![
            AmplePart { coefficient: q(1), divisor: RDivisorP1::point(lin(1), q(1)) },
            AmplePart { coefficient: q(1), divisor: RDivisorP1::new([(lin(1), q(2)), (lin(2), q(-1))]) },
        ];
        assert_eq!(r.parts, expect);

        let d = RDivisorP1::new([(lin(1), qf(5, 2)), (lin(2), qf(-1, 3)), (lin(3), qf(-1, 3))]);
        let r = decompose_ample(&d).unwrap();
        assert!(r.verify(&d));
        assert_eq!(r.parts.len(), 3);

        let d = RDivisorP1::new([(lin(1), q(1)), (lin(2), q(-1))]);
        assert!(matches!(decompose_ample(&d), Err(Error::NonPositiveDegree(_))));
    }

    #[test]
    fn higher_degree_points() {
        let quad = Point::parse("t^2+1").unwrap();
        let d = RDivisorP1::new([(Point::Infinity, qf(7, 3)), (quad, qf(-1, 2)), (lin(0), qf(-4, 5))]);
        let r = decompose_ample(&d).unwrap();
        assert!(r.verify(&d));
    }

    fn divisor() -> impl Strategy<Value = RDivisorP1> {
        prop::collection::vec((-4i64..=4, -9i64..=9, 1i64..=6), 1..=5).prop_map(|v| {
            RDivisorP1::new(v.into_iter().map(|(a, n, d)| (if a == 4 { Point::Infinity } else { lin(a) }, qf(n, d))))
        })
    }

    proptest! {
        #[test]
        fn reconstruction(d in divisor()) {
            prop_assume!(d.degree().is_positive());
            let r = decompose_ample(&d).unwrap();
            prop_assert!(r.verify(&d));
            let pos = d.terms().filter(|(_, c)| c.is_positive()).count();
            let neg = d.terms().filter(|(_, c)| c.is_negative()).count();
            prop_assert!(r.parts.len() <= pos + neg);
        }
    }
}
