//! Block dispatch across worker threads.
//!
//! Two policies:
//!
//! * [`Policy::Dynamic`]: a single shared cursor hands out the next block to
//!   whichever worker asks first, so fast workers simply take more blocks.
//! * [`Policy::Static`]: blocks are cut up front into `workers` contiguous
//!   chunks whose sizes differ by at most one.
//!
//! The body receives `(worker, index, &block)` and must only write state that
//! belongs to its block. Under that contract the result of a run does not
//! depend on the policy or the worker count.

use std::ops::Range;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Policy {
    #[default]
    Dynamic,
    Static,
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Policy::Dynamic => "dynamic",
            Policy::Static => "static",
        })
    }
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dynamic" => Ok(Policy::Dynamic),
            "static" => Ok(Policy::Static),
            _ => Err(format!(
                "unknown scheduler '{s}' (expected dynamic or static)"
            )),
        }
    }
}

/// An ordered sequence of blocks with an atomic handout cursor.
#[derive(Debug)]
pub struct WorkQueue<'a, T> {
    items: &'a [T],
    cursor: AtomicUsize,
}

impl<'a, T> WorkQueue<'a, T> {
    pub fn new(items: &'a [T]) -> Self {
        Self {
            items,
            cursor: AtomicUsize::new(0),
        }
    }

    /// Hands out the next block; each index is returned exactly once, in order.
    pub fn next(&self) -> Option<(usize, &'a T)> {
        let i = self.cursor.fetch_add(1, Ordering::Relaxed);
        self.items.get(i).map(|t| (i, t))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Per-run accounting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunStats {
    pub blocks_per_worker: Vec<usize>,
    pub busy_per_worker: Vec<Duration>,
    pub wall: Duration,
}

impl RunStats {
    pub fn total_blocks(&self) -> usize {
        self.blocks_per_worker.iter().sum()
    }
}

/// A block body failed; remaining blocks were abandoned.
#[derive(Debug, Clone, PartialEq)]
pub struct RunError<E> {
    pub block: usize,
    pub error: E,
}

impl<E: std::fmt::Display> std::fmt::Display for RunError<E> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "block {} failed: {}", self.block, self.error)
    }
}

impl<E: std::fmt::Debug + std::fmt::Display> std::error::Error for RunError<E> {}

/// Contiguous chunk boundaries for the static policy; the first
/// `len % workers` chunks get one extra block.
pub fn static_chunks(len: usize, workers: usize) -> Vec<Range<usize>> {
    let workers = workers.max(1);
    let (base, extra) = (len / workers, len % workers);
    let mut start = 0;
    (0..workers)
        .map(|w| {
            let size = base + usize::from(w < extra);
            let r = start..start + size;
            start += size;
            r
        })
        .collect()
}

pub fn run<T, E, F>(
    policy: Policy,
    items: &[T],
    workers: usize,
    body: F,
) -> Result<RunStats, RunError<E>>
where
    T: Sync,
    E: Send,
    F: Fn(usize, usize, &T) -> Result<(), E> + Sync,
{
    match policy {
        Policy::Dynamic => run_dynamic(items, workers, body),
        Policy::Static => run_static(items, workers, body),
    }
}

/// Pull-based execution: each worker takes the next unclaimed block when it
/// finishes its current one.
pub fn run_dynamic<T, E, F>(items: &[T], workers: usize, body: F) -> Result<RunStats, RunError<E>>
where
    T: Sync,
    E: Send,
    F: Fn(usize, usize, &T) -> Result<(), E> + Sync,
{
    let queue = WorkQueue::new(items);
    execute(items.len(), workers, |_worker| || queue.next(), body)
}

/// Equal-share execution: worker `w` runs chunk `w` of [`static_chunks`].
pub fn run_static<T, E, F>(items: &[T], workers: usize, body: F) -> Result<RunStats, RunError<E>>
where
    T: Sync,
    E: Send,
    F: Fn(usize, usize, &T) -> Result<(), E> + Sync,
{
    let chunks = static_chunks(items.len(), workers);
    execute(
        items.len(),
        workers,
        |worker| {
            let mut range = chunks[worker].clone();
            move || range.next().map(|i| (i, &items[i]))
        },
        body,
    )
}

fn execute<'a, T, E, F, S, N>(
    len: usize,
    workers: usize,
    source: S,
    body: F,
) -> Result<RunStats, RunError<E>>
where
    T: Sync + 'a,
    E: Send,
    F: Fn(usize, usize, &T) -> Result<(), E> + Sync,
    S: Fn(usize) -> N + Sync,
    N: FnMut() -> Option<(usize, &'a T)>,
{
    let workers = workers.max(1);
    let start = Instant::now();
    let mut stats = RunStats {
        blocks_per_worker: vec![0; workers],
        busy_per_worker: vec![Duration::ZERO; workers],
        wall: Duration::ZERO,
    };
    if len == 0 {
        return Ok(stats);
    }
    let abort = AtomicBool::new(false);
    let failure: Mutex<Option<RunError<E>>> = Mutex::new(None);

    let work = |worker: usize| -> (usize, Duration) {
        let mut next = source(worker);
        let mut done = 0;
        let mut busy = Duration::ZERO;
        while !abort.load(Ordering::Relaxed) {
            let Some((index, item)) = next() else { break };
            let t0 = Instant::now();
            let outcome = body(worker, index, item);
            busy += t0.elapsed();
            match outcome {
                Ok(()) => done += 1,
                Err(error) => {
                    abort.store(true, Ordering::Relaxed);
                    let mut slot = failure.lock().unwrap();
                    if slot.is_none() {
                        *slot = Some(RunError {
                            block: index,
                            error,
                        });
                    }
                    break;
                }
            }
        }
        (done, busy)
    };

    if workers == 1 {
        let (done, busy) = work(0);
        stats.blocks_per_worker[0] = done;
        stats.busy_per_worker[0] = busy;
    } else {
        let work = &work;
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers).map(|w| scope.spawn(move || work(w))).collect();
            for (w, h) in handles.into_iter().enumerate() {
                let (done, busy) = h.join().expect("worker panicked");
                stats.blocks_per_worker[w] = done;
                stats.busy_per_worker[w] = busy;
            }
        });
    }
    stats.wall = start.elapsed();
    match failure.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(stats),
    }
}

/// A simulated core: `slowdown` multiplies the cost of every block it runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkerProfile {
    pub id: usize,
    pub slowdown: f64,
}

impl WorkerProfile {
    pub fn new(id: usize, slowdown: f64) -> Self {
        assert!(slowdown >= 1.0, "slowdown must be >= 1");
        Self { id, slowdown }
    }

    pub fn from_slowdowns(slowdowns: &[f64]) -> Vec<WorkerProfile> {
        slowdowns
            .iter()
            .enumerate()
            .map(|(i, &s)| Self::new(i, s))
            .collect()
    }
}

/// Runs `blocks` synthetic blocks of cost `unit` on one worker per profile
/// and returns the makespan. Each block sleeps for `unit × slowdown` of the
/// worker that executes it, so the result does not depend on how many
/// physical cores the host has.
pub fn simulate_heterogeneous(
    blocks: usize,
    unit: Duration,
    profiles: &[WorkerProfile],
    policy: Policy,
) -> Duration {
    let items = vec![(); blocks];
    let stats = run(policy, &items, profiles.len(), |worker, _, _| {
        std::thread::sleep(unit.mul_f64(profiles[worker].slowdown));
        Ok::<(), ()>(())
    })
    .expect("synthetic bodies do not fail");
    stats.wall
}
