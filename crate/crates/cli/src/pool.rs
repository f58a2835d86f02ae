//! Fixed-size worker pool with results delivered in cell order.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

/// Runs `work` on every cell using `threads` workers and hands each result to
/// `sink` on the calling thread, in cell order. A panicking cell becomes an
/// `Err` for that cell only.
pub fn run_ordered<C, T>(
    cells: &[C],
    threads: usize,
    work: impl Fn(&C) -> Result<T, String> + Sync,
    mut sink: impl FnMut(usize, Result<T, String>),
) where
    C: Sync,
    T: Send,
{
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, cells.len().max(1)) {
            let tx = tx.clone();
            let next = &next;
            let work = &work;
            scope.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= cells.len() {
                    break;
                }
                let out = catch_unwind(AssertUnwindSafe(|| work(&cells[k]))).unwrap_or_else(|p| {
                    let msg = p
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "worker panicked".into());
                    Err(format!("panic: {msg}"))
                });
                if tx.send((k, out)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut emitted = 0;
        for (k, out) in rx {
            pending.insert(k, out);
            while let Some(out) = pending.remove(&emitted) {
                sink(emitted, out);
                emitted += 1;
            }
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let cells: Vec<u64> = (0..50).collect();
        for threads in [1, 3, 8] {
            let mut seen = Vec::new();
            run_ordered(
                &cells,
                threads,
                |&c| {
                    std::thread::sleep(std::time::Duration::from_micros((50 - c) * 20));
                    Ok(c * c)
                },
                |k, r| seen.push((k, r.unwrap())),
            );
            let want: Vec<(usize, u64)> = cells.iter().map(|&c| (c as usize, c * c)).collect();
            assert_eq!(seen, want);
        }
    }

    #[test]
    fn panics_are_isolated() {
        let cells = [1, 0, 2];
        let mut out = Vec::new();
        let prev = std::panic::take_hook();
        std::panic::set_hook(Box::new(|_| {}));
        run_ordered(
            &cells,
            2,
            |&c| {
                assert!(c != 0, "zero cell");
                Ok(10 / c)
            },
            |_, r| out.push(r),
        );
        std::panic::set_hook(prev);
        assert_eq!(out[0], Ok(10));
        assert!(out[1].as_ref().unwrap_err().contains("zero cell"));
        assert_eq!(out[2], Ok(5));
    }
}
