//! Tiny work-stealing pool for grid evaluation. Results come back in
//! index order no matter which worker finished first, so output files
//! are deterministic; on error the failure at the smallest index wins.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

pub fn map_ordered<T, F>(n: usize, f: F) -> qrm::Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> qrm::Result<T> + Sync,
{
    let workers = std::thread::available_parallelism().map_or(1, |w| w.get()).min(n.max(1));
    if workers <= 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    let mut slots: Vec<Option<qrm::Result<T>>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, f) = (&next, &f);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n || tx.send((i, f(i))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, r) in rx {
            slots[i] = Some(r);
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every index was dispatched"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_come_back_in_index_order() {
        let out = map_ordered(100, |i| Ok(i * i)).unwrap();
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn first_error_by_index_wins() {
        let err = map_ordered(50, |i| {
            if i % 7 == 3 {
                Err(qrm::QrmError::InvalidParameter(format!("index {i}")))
            } else {
                Ok(i)
            }
        })
        .unwrap_err();
        match err {
            qrm::QrmError::InvalidParameter(msg) => assert_eq!(msg, "index 3"),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
