use std::num::NonZeroUsize;

use fusionforge_core::mining::Executor;

/// Runs jobs on up to `threads` scoped worker threads, preserving order.
#[derive(Debug, Clone, Copy)]
pub struct Threads(pub NonZeroUsize);

impl Threads {
    pub fn new(threads: usize) -> Self {
        Self(NonZeroUsize::new(threads).unwrap_or(NonZeroUsize::MIN))
    }

    pub fn available() -> Self {
        Self(std::thread::available_parallelism().unwrap_or(NonZeroUsize::MIN))
    }
}

impl Executor for Threads {
    fn map<T: Send, R: Send, F: Fn(T) -> R + Sync>(&self, items: Vec<T>, f: F) -> Vec<R> {
        let workers = self.0.get().min(items.len());
        if workers <= 1 {
            return items.into_iter().map(f).collect();
        }
        let mut lanes: Vec<Vec<(usize, T)>> = (0..workers).map(|_| Vec::new()).collect();
        for (i, item) in items.into_iter().enumerate() {
            lanes[i % workers].push((i, item));
        }
        let f = &f;
        let mut done: Vec<(usize, R)> = std::thread::scope(|s| {
            let handles: Vec<_> = lanes
                .into_iter()
                .map(|lane| s.spawn(move || lane.into_iter().map(|(i, t)| (i, f(t))).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("worker thread panicked"))
                .collect()
        });
        done.sort_by_key(|(i, _)| *i);
        done.into_iter().map(|(_, r)| r).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let out = Threads::new(3).map((0..10).collect(), |x: i32| x * x);
        assert_eq!(out, (0..10).map(|x| x * x).collect::<Vec<_>>());
    }
}
