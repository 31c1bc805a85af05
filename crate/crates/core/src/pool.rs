//! Bounded concurrency with results in input order.

use std::future::Future;

use futures::{stream, StreamExt, TryStreamExt};

/// Runs `f` over `items` with at most `limit` futures in flight. Output
/// position `i` always holds the result for input `i`.
pub(crate) async fn map_ordered<I, F, Fut, T>(items: I, limit: usize, f: F) -> Vec<T>
where
    I: IntoIterator,
    F: FnMut(I::Item) -> Fut,
    Fut: Future<Output = T>,
{
    stream::iter(items).map(f).buffered(limit.max(1)).collect().await
}

/// Like [`map_ordered`] but stops at the first error.
pub(crate) async fn try_map_ordered<I, F, Fut, T, E>(items: I, limit: usize, f: F) -> Result<Vec<T>, E>
where
    I: IntoIterator,
    F: FnMut(I::Item) -> Fut,
    Fut: Future<Output = Result<T, E>>,
{
    stream::iter(items).map(f).buffered(limit.max(1)).try_collect().await
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::time::Duration;

    #[tokio::test]
    async fn order_survives_out_of_order_completion() {
        let in_flight = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        let out = map_ordered(0..20u64, 4, |i| {
            let in_flight = &in_flight;
            let peak = &peak;
            async move {
                let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                peak.fetch_max(now, Ordering::SeqCst);
                tokio::time::sleep(Duration::from_millis((20 - i) % 7)).await;
                in_flight.fetch_sub(1, Ordering::SeqCst);
                i * 10
            }
        })
        .await;
        assert_eq!(out, (0..20).map(|i| i * 10).collect::<Vec<_>>());
        assert!(peak.load(Ordering::SeqCst) <= 4);
    }

    #[tokio::test]
    async fn first_error_wins() {
        let out: Result<Vec<u32>, String> = try_map_ordered(0..5u32, 2, |i| async move {
            if i == 3 {
                Err(format!("bad {i}"))
            } else {
                Ok(i)
            }
        })
        .await;
        assert_eq!(out.unwrap_err(), "bad 3");
    }
}
