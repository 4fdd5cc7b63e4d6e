//! Concatenated Farey sequences `F_1, F_2, F_3, ...`.
//!
//! Every block `F_k` lists the reduced fractions of `[0, 1]` with denominator
//! at most `k` in ascending order, both endpoints included, giving the stream
//! `0, 1, 0, 1/2, 1, 0, 1/3, 1/2, 2/3, 1, ...`.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Streams the concatenated Farey blocks using the neighbour recurrence.
#[derive(Clone, Debug)]
pub struct FareyIter {
    order: u64,
    // a/b is emitted next, c/d follows it within the current block.
    a: u64,
    b: u64,
    c: u64,
    d: u64,
}

impl FareyIter {
    pub fn new() -> Self {
        FareyIter {
            order: 1,
            a: 0,
            b: 1,
            c: 1,
            d: 1,
        }
    }

    /// Current block order `k`.
    pub fn order(&self) -> u64 {
        self.order
    }
}

impl Default for FareyIter {
    fn default() -> Self {
        Self::new()
    }
}

impl Iterator for FareyIter {
    type Item = Fraction;

    fn next(&mut self) -> Option<Fraction> {
        let out = Fraction {
            num: self.a,
            den: self.b,
        };
        if self.a == 1 && self.b == 1 {
            self.order += 1;
            self.a = 0;
            self.b = 1;
            self.c = 1;
            self.d = self.order;
        } else {
            let m = (self.order + self.b) / self.d;
            let (c, d) = (m * self.c - self.a, m * self.d - self.b);
            self.a = self.c;
            self.b = self.d;
            self.c = c;
            self.d = d;
        }
        Some(out)
    }
}

/// The `n`-th element (0-based) of the concatenated Farey stream.
pub fn farey_term(n: u64) -> Fraction {
    let mut remaining = n;
    let mut order = 1u64;
    // Skip whole blocks: |F_k| = 1 + sum_{j<=k} phi(j).
    let mut size = 2u64;
    while remaining >= size {
        remaining -= size;
        order += 1;
        size += euler_phi(order);
    }
    let mut it = FareyIter {
        order,
        a: 0,
        b: 1,
        c: 1,
        d: order,
    };
    it.nth(remaining as usize).expect("infinite iterator")
}

pub(crate) fn euler_phi(mut n: u64) -> u64 {
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}
