//! Truncated power series in eps whose coefficients are polynomials in x.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type Poly = Vec<C64>;

fn trim(p: &mut Poly) {
    while p.len() > 1 && *p.last().unwrap() == C64::new(0.0, 0.0) {
        p.pop();
    }
}

pub fn poly_add(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![C64::new(0.0, 0.0); a.len().max(b.len())];
    for (i, v) in a.iter().enumerate() {
        out[i] += v;
    }
    for (i, v) in b.iter().enumerate() {
        out[i] += v;
    }
    trim(&mut out);
    out
}

pub fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    if a.is_empty() || b.is_empty() {
        return vec![C64::new(0.0, 0.0)];
    }
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(&mut out);
    out
}

pub fn poly_scale(a: &Poly, s: C64) -> Poly {
    let mut out: Poly = a.iter().map(|v| v * s).collect();
    trim(&mut out);
    out
}

pub fn poly_eval(a: &[C64], x: C64) -> C64 {
    a.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * x + c)
}

/// sum_{k=0}^{order} eps^k terms[k](x)
#[derive(Debug, Clone, PartialEq)]
pub struct FormalSeries {
    order: usize,
    terms: Vec<Poly>,
}

impl FormalSeries {
    pub fn zero(order: usize) -> Self {
        FormalSeries {
            order,
            terms: vec![vec![C64::new(0.0, 0.0)]; order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.terms[0] = vec![C64::new(1.0, 0.0)];
        s
    }

    pub fn from_terms(order: usize, mut terms: Vec<Poly>) -> Self {
        terms.resize(order + 1, vec![C64::new(0.0, 0.0)]);
        terms.truncate(order + 1);
        for t in terms.iter_mut() {
            if t.is_empty() {
                t.push(C64::new(0.0, 0.0));
            }
            trim(t);
        }
        FormalSeries { order, terms }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn term(&self, k: usize) -> &Poly {
        &self.terms[k]
    }

    pub fn terms(&self) -> &[Poly] {
        &self.terms
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let terms = (0..=order).map(|k| poly_add(&self.terms[k], &other.terms[k])).collect();
        FormalSeries { order, terms }
    }

    pub fn scale(&self, s: C64) -> Self {
        FormalSeries {
            order: self.order,
            terms: self.terms.iter().map(|p| poly_scale(p, s)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let mut terms = vec![vec![C64::new(0.0, 0.0)]; order + 1];
        for i in 0..=order {
            for j in 0..=order - i {
                terms[i + j] = poly_add(&terms[i + j], &poly_mul(&self.terms[i], &other.terms[j]));
            }
        }
        FormalSeries { order, terms }
    }

    fn has_zero_constant_term(&self) -> bool {
        self.terms[0].iter().all(|c| c.norm() == 0.0)
    }

    /// exp of a series with vanishing eps^0 term.
    pub fn exp(&self) -> Result<Self> {
        if !self.has_zero_constant_term() {
            return Err(Error::Domain("exp needs a series without eps^0 term".into()));
        }
        let mut out = Self::one(self.order);
        let mut power = Self::one(self.order);
        for m in 1..=self.order {
            power = power.mul(self).scale(C64::new(1.0 / m as f64, 0.0));
            out = out.add(&power);
        }
        Ok(out)
    }

    /// log of a series whose eps^0 term is the constant 1.
    pub fn log(&self) -> Result<Self> {
        let t0 = &self.terms[0];
        if t0.len() != 1 || (t0[0] - 1.0).norm() > 0.0 {
            return Err(Error::Domain("log needs eps^0 term equal to 1".into()));
        }
        let mut s = self.clone();
        s.terms[0] = vec![C64::new(0.0, 0.0)];
        let mut out = Self::zero(self.order);
        let mut power = Self::one(self.order);
        for m in 1..=self.order {
            power = power.mul(&s);
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            out = out.add(&power.scale(C64::new(sign / m as f64, 0.0)));
        }
        Ok(out)
    }
}

/// Taylor coefficients of exp(f) from those of f (f[0] may be nonzero).
pub fn exp_taylor(f: &[C64]) -> Vec<C64> {
    let k = f.len();
    let mut out = vec![C64::new(0.0, 0.0); k];
    if k == 0 {
        return out;
    }
    out[0] = f[0].exp();
    // g' = f' g
    for n in 1..k {
        let mut s = C64::new(0.0, 0.0);
        for j in 1..=n {
            s += f[j] * out[n - j] * j as f64;
        }
        out[n] = s / n as f64;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series_from(order: usize, v: &[f64], deg: usize) -> FormalSeries {
        let mut terms = vec![vec![C64::new(0.0, 0.0)]];
        for k in 1..=order {
            terms.push((0..=deg).map(|j| C64::new(v[(k * (deg + 1) + j) % v.len()], 0.0)).collect());
        }
        FormalSeries::from_terms(order, terms)
    }

    proptest! {
        #[test]
        fn exp_log_round_trip(order in 1usize..=8, deg in 0usize..4, v in prop::collection::vec(-1.0f64..1.0, 40)) {
            let s = series_from(order, &v, deg);
            let back = s.exp().unwrap().log().unwrap();
            for k in 0..=order {
                let a = s.term(k);
                let b = back.term(k);
                for j in 0..a.len().max(b.len()) {
                    let x = a.get(j).cloned().unwrap_or_default();
                    let y = b.get(j).cloned().unwrap_or_default();
                    prop_assert!((x - y).norm() < 1e-12, "k={k} j={j}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn exp_taylor_matches_series() {
        let f = [C64::new(0.0, 0.0), C64::new(0.5, 0.0), C64::new(0.25, 0.0)];
        let g = exp_taylor(&f);
        // exp(x/2 + x^2/4): 1 + x/2 + (1/8 + 1/4) x^2
        assert!((g[2] - 0.375).norm() < 1e-15);
    }
}
