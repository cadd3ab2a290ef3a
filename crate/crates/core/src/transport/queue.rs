//! Bounded FIFO hand-off between the socket reader and the processing stage.

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex, MutexGuard};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum QueueError {
    #[error("queue is closed")]
    Closed,
    #[error("queue is full")]
    Full,
}

struct State<T> {
    items: VecDeque<T>,
    closed: bool,
    pushed: u64,
    popped: u64,
}

/// Blocking bounded queue.
///
/// `push` waits for space when full, `pop` waits for an item when empty.
/// After [`close`](FifoQueue::close), pushes fail and pops keep returning
/// the remaining items until the queue is empty, then fail with `Closed`.
///
/// Intended for one producer and one consumer; share it with an `Arc`.
pub struct FifoQueue<T> {
    capacity: usize,
    state: Mutex<State<T>>,
    not_empty: Condvar,
    not_full: Condvar,
}

impl<T> FifoQueue<T> {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "queue capacity must be at least 1");
        Self {
            capacity,
            state: Mutex::new(State {
                items: VecDeque::with_capacity(capacity),
                closed: false,
                pushed: 0,
                popped: 0,
            }),
            not_empty: Condvar::new(),
            not_full: Condvar::new(),
        }
    }

    fn lock(&self) -> MutexGuard<'_, State<T>> {
        self.state.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.lock().items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_closed(&self) -> bool {
        self.lock().closed
    }

    /// Blocks until there is room, then enqueues.
    pub fn push(&self, item: T) -> Result<(), QueueError> {
        let mut st = self.lock();
        while st.items.len() >= self.capacity && !st.closed {
            st = self.not_full.wait(st).unwrap_or_else(|p| p.into_inner());
        }
        if st.closed {
            return Err(QueueError::Closed);
        }
        st.items.push_back(item);
        st.pushed += 1;
        drop(st);
        self.not_empty.notify_one();
        Ok(())
    }

    /// Enqueues without waiting; `Full` hands the caller the decision to drop.
    pub fn try_push(&self, item: T) -> Result<(), QueueError> {
        let mut st = self.lock();
        if st.closed {
            return Err(QueueError::Closed);
        }
        if st.items.len() >= self.capacity {
            return Err(QueueError::Full);
        }
        st.items.push_back(item);
        st.pushed += 1;
        drop(st);
        self.not_empty.notify_one();
        Ok(())
    }

    /// Blocks until an item arrives, or the queue is closed and drained.
    pub fn pop(&self) -> Result<T, QueueError> {
        let mut st = self.lock();
        loop {
            if let Some(item) = st.items.pop_front() {
                st.popped += 1;
                drop(st);
                self.not_full.notify_one();
                return Ok(item);
            }
            if st.closed {
                return Err(QueueError::Closed);
            }
            st = self.not_empty.wait(st).unwrap_or_else(|p| p.into_inner());
        }
    }

    /// Rejects further pushes and wakes every waiter. Queued items stay poppable.
    pub fn close(&self) {
        self.lock().closed = true;
        self.not_empty.notify_all();
        self.not_full.notify_all();
    }

    /// Removes everything still queued.
    pub fn drain(&self) -> Vec<T> {
        let mut st = self.lock();
        let out: Vec<T> = st.items.drain(..).collect();
        drop(st);
        self.not_full.notify_all();
        out
    }

    /// `(pushed, popped)` totals since creation.
    pub fn counts(&self) -> (u64, u64) {
        let st = self.lock();
        (st.pushed, st.popped)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;
    use std::thread;
    use std::time::Duration;

    #[test]
    fn pops_in_push_order() {
        let q = FifoQueue::new(4);
        for c in ['a', 'b', 'c'] {
            q.push(c).unwrap();
        }
        assert_eq!([q.pop(), q.pop(), q.pop()], [Ok('a'), Ok('b'), Ok('c')]);
    }

    #[test]
    fn closed_and_empty_pop_fails() {
        let q: FifoQueue<u8> = FifoQueue::new(1);
        q.close();
        assert_eq!(q.pop(), Err(QueueError::Closed));
        assert_eq!(q.push(1), Err(QueueError::Closed));
    }

    #[test]
    fn close_keeps_queued_items_poppable() {
        let q = FifoQueue::new(3);
        q.push(1).unwrap();
        q.push(2).unwrap();
        q.close();
        assert_eq!(q.pop(), Ok(1));
        assert_eq!(q.pop(), Ok(2));
        assert_eq!(q.pop(), Err(QueueError::Closed));
    }

    #[test]
    fn try_push_reports_full() {
        let q = FifoQueue::new(1);
        q.try_push(1).unwrap();
        assert_eq!(q.try_push(2), Err(QueueError::Full));
    }

    #[test]
    fn blocked_producer_resumes_when_space_frees() {
        let q = Arc::new(FifoQueue::new(1));
        q.push(0).unwrap();
        let producer = {
            let q = Arc::clone(&q);
            thread::spawn(move || q.push(1))
        };
        thread::sleep(Duration::from_millis(50));
        assert_eq!(q.len(), 1);
        assert_eq!(q.pop(), Ok(0));
        producer.join().unwrap().unwrap();
        assert_eq!(q.pop(), Ok(1));
    }

    #[test]
    fn close_wakes_blocked_consumer() {
        let q: Arc<FifoQueue<u32>> = Arc::new(FifoQueue::new(2));
        let consumer = {
            let q = Arc::clone(&q);
            thread::spawn(move || q.pop())
        };
        thread::sleep(Duration::from_millis(20));
        q.close();
        assert_eq!(consumer.join().unwrap(), Err(QueueError::Closed));
    }

    #[test]
    fn concurrent_stress_keeps_order_and_count() {
        const N: u64 = 100_000;
        let q = Arc::new(FifoQueue::new(64));
        let producer = {
            let q = Arc::clone(&q);
            thread::spawn(move || {
                for i in 0..N {
                    q.push(i).unwrap();
                }
                q.close();
            })
        };
        let mut expected = 0u64;
        while let Ok(v) = q.pop() {
            assert_eq!(v, expected, "reordered or lost item");
            expected += 1;
        }
        producer.join().unwrap();
        assert_eq!(expected, N);
        assert_eq!(q.counts(), (N, N));
    }

    #[test]
    fn conservation_with_drain() {
        let q = FifoQueue::new(10);
        for i in 0..7 {
            q.push(i).unwrap();
        }
        let popped = (0..3).map(|_| q.pop().unwrap()).count() as u64;
        q.close();
        let drained = q.drain().len() as u64;
        assert_eq!(q.counts().0, popped + drained);
    }
}
