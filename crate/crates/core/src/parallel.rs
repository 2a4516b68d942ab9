//! Deterministic parallel folds.
//!
//! Samples are grouped into chunks of a fixed size that does not depend on the
//! number of workers. Each chunk is folded sequentially, and the chunk results
//! are merged by a fixed-order pairwise tree. Floating-point results are
//! therefore bit-identical for any worker count.

use crate::error::{Error, Result};
use rayon::prelude::*;

/// Samples per chunk.
pub const CHUNK: u64 = 256;

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Merge `items` pairwise, left to right, level by level.
pub fn tree_reduce<A>(mut items: Vec<A>, merge: impl Fn(A, A) -> A) -> Option<A> {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(merge(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

/// Fold sample indices `0..count` into an accumulator.
pub fn fold<A, I, S, M>(workers: usize, count: u64, init: I, step: S, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, u64) -> Result<()> + Sync,
    M: Fn(A, A) -> A,
{
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<A> = pool(workers)?.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = init();
                let end = ((c + 1) * CHUNK).min(count);
                for i in c * CHUNK..end {
                    step(&mut acc, i)?;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<A>>>()
    })?;
    Ok(tree_reduce(parts, merge).unwrap_or_else(init))
}

/// Map every index to a value, preserving order.
pub fn map<T, F>(workers: usize, count: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    pool(workers)?.install(|| (0..count).into_par_iter().map(&f).collect())
}

/// Running sums of a fixed-length vector of values and of their squares.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub sum: Vec<f64>,
    pub sumsq: Vec<f64>,
}

impl Moments {
    pub fn new(len: usize) -> Self {
        Self { n: 0, sum: vec![0.0; len], sumsq: vec![0.0; len] }
    }

    pub fn push(&mut self, values: &[f64]) {
        self.n += 1;
        for ((s, q), v) in self.sum.iter_mut().zip(self.sumsq.iter_mut()).zip(values) {
            *s += v;
            *q += v * v;
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.n += other.n;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sumsq.iter_mut().zip(&other.sumsq) {
            *a += b;
        }
        self
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.sum[i] / self.n as f64
    }

    /// Unbiased sample variance of component `i`.
    pub fn variance(&self, i: usize) -> f64 {
        let n = self.n as f64;
        if self.n < 2 {
            return 0.0;
        }
        let m = self.sum[i] / n;
        ((self.sumsq[i] - n * m * m) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean of component `i`.
    pub fn std_error(&self, i: usize) -> f64 {
        (self.variance(i) / self.n as f64).sqrt()
    }
}
