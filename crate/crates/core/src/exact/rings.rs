use std::collections::BTreeMap;
use std::ops::{AddAssign, Mul};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::engine::Semiring;

/// Plain weighted counting: `atom(i) = w_i`.
#[derive(Debug, Clone)]
pub struct WeightedRing<C> {
    pub weights: Vec<C>,
}

impl<C> Semiring for WeightedRing<C>
where
    C: Clone + Zero + One + for<'a> AddAssign<&'a C>,
    for<'a> &'a C: Mul<&'a C, Output = C>,
{
    type Elem = C;
    fn zero(&self) -> C {
        C::zero()
    }
    fn one(&self) -> C {
        C::one()
    }
    fn atom(&self, letter: usize) -> C {
        self.weights[letter].clone()
    }
    fn is_zero(&self, x: &C) -> bool {
        x.is_zero()
    }
    fn add_assign(&self, acc: &mut C, x: &C) {
        *acc += x;
    }
    fn mul(&self, a: &C, b: &C) -> C {
        a * b
    }
}

/// Weighted counts together with their gradient in the log-weights:
/// the size-`n` element is `(P_n, (sum_{|u|=n} w(u) N_i(u))_i)`.
#[derive(Debug, Clone)]
pub struct DualRing<C> {
    pub weights: Vec<C>,
}

impl<C> Semiring for DualRing<C>
where
    C: Clone + Zero + One + for<'a> AddAssign<&'a C>,
    for<'a> &'a C: Mul<&'a C, Output = C>,
{
    type Elem = (C, Vec<C>);
    fn zero(&self) -> Self::Elem {
        (C::zero(), vec![C::zero(); self.weights.len()])
    }
    fn one(&self) -> Self::Elem {
        (C::one(), vec![C::zero(); self.weights.len()])
    }
    fn atom(&self, letter: usize) -> Self::Elem {
        let mut g = vec![C::zero(); self.weights.len()];
        g[letter] = self.weights[letter].clone();
        (self.weights[letter].clone(), g)
    }
    fn is_zero(&self, x: &Self::Elem) -> bool {
        x.0.is_zero()
    }
    fn add_assign(&self, acc: &mut Self::Elem, x: &Self::Elem) {
        acc.0 += &x.0;
        for (a, b) in acc.1.iter_mut().zip(&x.1) {
            *a += b;
        }
    }
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        let g = a
            .1
            .iter()
            .zip(&b.1)
            .map(|(ga, gb)| {
                let mut s = &a.0 * gb;
                s += &(&b.0 * ga);
                s
            })
            .collect();
        (&a.0 * &b.0, g)
    }
}

/// Word counts by occurrence profile. Profiles exceeding `cap` in some
/// coordinate are dropped, which keeps the DP within budget when only one
/// target profile is needed.
#[derive(Debug, Clone)]
pub struct ProfileRing {
    pub k: usize,
    pub cap: Option<Vec<u32>>,
}

pub type Profiles = BTreeMap<Vec<u32>, BigUint>;

impl Semiring for ProfileRing {
    type Elem = Profiles;
    fn zero(&self) -> Profiles {
        Profiles::new()
    }
    fn one(&self) -> Profiles {
        Profiles::from([(vec![0; self.k], BigUint::one())])
    }
    fn atom(&self, letter: usize) -> Profiles {
        let mut p = vec![0; self.k];
        p[letter] = 1;
        if self.cap.as_ref().is_some_and(|c| c[letter] == 0) {
            return Profiles::new();
        }
        Profiles::from([(p, BigUint::one())])
    }
    fn is_zero(&self, x: &Profiles) -> bool {
        x.is_empty()
    }
    fn add_assign(&self, acc: &mut Profiles, x: &Profiles) {
        for (p, c) in x {
            *acc.entry(p.clone()).or_default() += c;
        }
    }
    fn mul(&self, a: &Profiles, b: &Profiles) -> Profiles {
        let mut out = Profiles::new();
        for (pa, ca) in a {
            'next: for (pb, cb) in b {
                let mut p = Vec::with_capacity(self.k);
                for i in 0..self.k {
                    let s = pa[i] + pb[i];
                    if self.cap.as_ref().is_some_and(|c| s > c[i]) {
                        continue 'next;
                    }
                    p.push(s);
                }
                *out.entry(p).or_default() += ca * cb;
            }
        }
        out
    }
}
