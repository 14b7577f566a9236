//! Data-parallel loop primitives.
//!
//! Every kernel in the crate goes through this module. With the `parallel`
//! feature the loops run on the rayon pool, otherwise on the calling thread.
//! Reductions always use the same fixed chunk partition, so results are
//! bitwise identical between the two back ends and across thread counts.

/// Fixed partition length for reductions.
pub const CHUNK: usize = 4096;

pub mod sequential {
    use super::CHUNK;

    pub fn fill<T, F>(out: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        for (i, o) in out.iter_mut().enumerate() {
            *o = f(i);
        }
    }

    pub fn update<T, F>(data: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        for (i, v) in data.iter_mut().enumerate() {
            f(i, v);
        }
    }

    pub fn update_chunks<T, F>(data: &mut [T], len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        for (i, c) in data.chunks_mut(len).enumerate() {
            f(i, c);
        }
    }

    pub fn update_chunks_with<T, S, I, F>(data: &mut [T], len: usize, init: I, f: F)
    where
        T: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, usize, &mut [T]) + Sync + Send,
    {
        let mut scratch = init();
        for (i, c) in data.chunks_mut(len).enumerate() {
            f(&mut scratch, i, c);
        }
    }

    pub fn sum<F>(len: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let mut total = 0.0;
        let mut start = 0;
        while start < len {
            let end = (start + CHUNK).min(len);
            let mut s = 0.0;
            for i in start..end {
                s += f(i);
            }
            total += s;
            start = end;
        }
        total
    }

    pub fn max<F>(len: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        (0..len).map(f).fold(0.0, f64::max)
    }
}

#[cfg(feature = "parallel")]
pub mod parallel {
    use super::CHUNK;
    use rayon::prelude::*;

    pub fn fill<T, F>(out: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        out.par_iter_mut()
            .with_min_len(1024)
            .enumerate()
            .for_each(|(i, o)| *o = f(i));
    }

    pub fn update<T, F>(data: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        data.par_iter_mut()
            .with_min_len(1024)
            .enumerate()
            .for_each(|(i, v)| f(i, v));
    }

    pub fn update_chunks<T, F>(data: &mut [T], len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        data.par_chunks_mut(len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }

    pub fn update_chunks_with<T, S, I, F>(data: &mut [T], len: usize, init: I, f: F)
    where
        T: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, usize, &mut [T]) + Sync + Send,
    {
        data.par_chunks_mut(len)
            .enumerate()
            .for_each_init(init, |s, (i, c)| f(s, i, c));
    }

    pub fn sum<F>(len: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let chunks = len.div_ceil(CHUNK);
        let partial: Vec<f64> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK;
                let end = (start + CHUNK).min(len);
                let mut s = 0.0;
                for i in start..end {
                    s += f(i);
                }
                s
            })
            .collect();
        partial.into_iter().fold(0.0, |a, b| a + b)
    }

    pub fn max<F>(len: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        (0..len)
            .into_par_iter()
            .with_min_len(CHUNK)
            .map(f)
            .reduce(|| 0.0, f64::max)
    }
}

#[cfg(feature = "parallel")]
pub use parallel::*;
#[cfg(not(feature = "parallel"))]
pub use sequential::*;

/// Builds a vector by evaluating `f` at every index.
pub fn collect<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send + Default + Clone,
    F: Fn(usize) -> T + Sync + Send,
{
    let mut out = vec![T::default(); len];
    fill(&mut out, f);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_matches_sequential_bitwise() {
        let len = 3 * CHUNK + 17;
        let f = |i: usize| ((i as f64) * 0.37).sin() * 1e-3 + 1.0 / (1.0 + i as f64);
        assert_eq!(sum(len, f).to_bits(), sequential::sum(len, f).to_bits());
    }

    #[test]
    fn max_of_empty_is_zero() {
        assert_eq!(max(0, |_| 1.0), 0.0);
        assert_eq!(max(5, |i| i as f64), 4.0);
    }
}
