//! A simulated two-level memory: a disk of `B`-record blocks, an internal
//! memory of `M` words and a tally of block transfers.
//!
//! One record (a matrix triple or one dense-vector word) occupies one word,
//! so a block holds `B` records. Every block read or write is charged; there
//! is no caching between primitives. Internal memory is accounted through
//! [`MemBudget`] reservations taken by the code that holds the data.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cell::{Cell, RefCell};
use core::cmp::Reverse;

use crate::error::Error;

/// Internal memory capacity `M` and block size `B`, both in words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IoConfig {
    memory: usize,
    block: usize,
}

impl IoConfig {
    pub fn new(memory: usize, block: usize) -> Result<Self, Error> {
        if block < 2 {
            return Err(Error::InvalidConfig("block size must be at least 2"));
        }
        if memory < 4 * block {
            return Err(Error::InvalidConfig("memory must hold at least 4 blocks"));
        }
        Ok(IoConfig { memory, block })
    }

    #[inline]
    pub fn memory(&self) -> usize {
        self.memory
    }

    #[inline]
    pub fn block(&self) -> usize {
        self.block
    }

    /// Number of blocks needed for `n` records.
    #[inline]
    pub fn blocks_for(&self, n: usize) -> u64 {
        n.div_ceil(self.block) as u64
    }

    /// Records sorted in memory per initial run: `M` rounded down to whole blocks.
    #[inline]
    pub fn sort_chunk(&self) -> usize {
        (self.memory / self.block) * self.block
    }

    /// Merge fan-in: one block of memory is kept for the output buffer.
    #[inline]
    pub fn merge_fan_in(&self) -> usize {
        (self.memory / self.block - 1).max(2)
    }

    /// Number of merge passes `external_sort` performs on `n` records.
    pub fn merge_passes(&self, n: usize) -> u32 {
        if n == 0 {
            return 0;
        }
        let k = self.merge_fan_in();
        let mut runs = n.div_ceil(self.sort_chunk());
        let mut passes = 0;
        while runs > 1 {
            runs = runs.div_ceil(k);
            passes += 1;
        }
        passes
    }

    /// Exact transfer count of `external_sort` on `n` records.
    pub fn sort_transfers(&self, n: usize) -> u64 {
        2 * self.blocks_for(n) * (1 + self.merge_passes(n) as u64)
    }
}

/// Block transfer counters. Both are monotone within a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IoTally {
    pub reads: u64,
    pub writes: u64,
}

impl IoTally {
    #[inline]
    pub fn total(&self) -> u64 {
        self.reads + self.writes
    }

    /// Transfers performed since `earlier` was taken.
    pub fn since(&self, earlier: IoTally) -> IoTally {
        IoTally {
            reads: self.reads - earlier.reads,
            writes: self.writes - earlier.writes,
        }
    }
}

/// Accounting of internal memory in words.
#[derive(Debug)]
pub struct MemBudget {
    capacity: usize,
    in_use: Cell<usize>,
    peak: Cell<usize>,
}

impl MemBudget {
    fn new(capacity: usize) -> Self {
        MemBudget {
            capacity,
            in_use: Cell::new(0),
            peak: Cell::new(0),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn in_use(&self) -> usize {
        self.in_use.get()
    }

    /// Highest `in_use` observed at any checkpoint.
    pub fn peak(&self) -> usize {
        self.peak.get()
    }

    pub fn available(&self) -> usize {
        self.capacity - self.in_use.get()
    }

    pub fn reserve(&self, words: usize) -> Result<MemGuard<'_>, Error> {
        let in_use = self.in_use.get();
        if in_use + words > self.capacity {
            return Err(Error::BudgetExceeded {
                requested: words,
                in_use,
                capacity: self.capacity,
            });
        }
        self.in_use.set(in_use + words);
        self.peak.set(self.peak.get().max(in_use + words));
        Ok(MemGuard {
            budget: self,
            words,
        })
    }
}

/// Words held in internal memory; released on drop.
#[must_use]
#[derive(Debug)]
pub struct MemGuard<'a> {
    budget: &'a MemBudget,
    words: usize,
}

impl MemGuard<'_> {
    pub fn words(&self) -> usize {
        self.words
    }
}

impl Drop for MemGuard<'_> {
    fn drop(&mut self) {
        self.budget.in_use.set(self.budget.in_use.get() - self.words);
    }
}

/// A contiguous sequence of records starting on a block boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    first_block: usize,
    len: usize,
}

impl Run {
    pub const EMPTY: Run = Run {
        first_block: 0,
        len: 0,
    };

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn first_block(&self) -> usize {
        self.first_block
    }

    fn block_count(&self, block: usize) -> usize {
        self.len.div_ceil(block)
    }
}

/// Simulated disk plus the transfer tally and memory budget of one run.
///
/// Uses interior mutability so readers, writers and memory guards can be
/// held at the same time; a disk is not meant to be shared across threads.
#[derive(Debug)]
pub struct SimDisk<R> {
    config: IoConfig,
    blocks: RefCell<Vec<Option<Vec<R>>>>,
    tally: Cell<IoTally>,
    budget: MemBudget,
    writer_open: Cell<bool>,
}

impl<R: Clone> SimDisk<R> {
    pub fn new(config: IoConfig) -> Self {
        SimDisk {
            config,
            blocks: RefCell::new(Vec::new()),
            tally: Cell::new(IoTally::default()),
            budget: MemBudget::new(config.memory()),
            writer_open: Cell::new(false),
        }
    }

    #[inline]
    pub fn config(&self) -> &IoConfig {
        &self.config
    }

    #[inline]
    pub fn tally(&self) -> IoTally {
        self.tally.get()
    }

    #[inline]
    pub fn budget(&self) -> &MemBudget {
        &self.budget
    }

    pub fn reserve(&self, words: usize) -> Result<MemGuard<'_>, Error> {
        self.budget.reserve(words)
    }

    pub fn block_count(&self) -> usize {
        self.blocks.borrow().len()
    }

    fn charge_read(&self) {
        let mut t = self.tally.get();
        t.reads += 1;
        self.tally.set(t);
    }

    fn charge_write(&self) {
        let mut t = self.tally.get();
        t.writes += 1;
        self.tally.set(t);
    }

    /// Reads one block. Needs `B` free words for the caller to hold it.
    pub fn read_block(&self, index: usize) -> Result<Vec<R>, Error> {
        if self.budget.available() < self.config.block() {
            return Err(Error::BudgetExceeded {
                requested: self.config.block(),
                in_use: self.budget.in_use(),
                capacity: self.budget.capacity(),
            });
        }
        let mut out = Vec::new();
        self.read_into(index, &mut out)?;
        Ok(out)
    }

    /// Charged read into a buffer the caller has already reserved.
    fn read_into(&self, index: usize, buf: &mut Vec<R>) -> Result<(), Error> {
        let blocks = self.blocks.borrow();
        let block = blocks
            .get(index)
            .and_then(Option::as_ref)
            .ok_or(Error::UnknownBlock(index))?;
        buf.clear();
        buf.extend_from_slice(block);
        self.charge_read();
        Ok(())
    }

    /// Writes (appends or overwrites) one block.
    pub fn write_block(&self, index: usize, payload: Vec<R>) -> Result<(), Error> {
        if payload.len() > self.config.block() {
            return Err(Error::OversizedBlock {
                len: payload.len(),
                block: self.config.block(),
            });
        }
        let mut blocks = self.blocks.borrow_mut();
        let len = blocks.len();
        if index > len {
            return Err(Error::BlockGap { index, len });
        }
        if index == len {
            blocks.push(Some(payload));
        } else {
            blocks[index] = Some(payload);
        }
        self.charge_write();
        Ok(())
    }

    /// Drops the blocks of a run that is no longer needed. Not an I/O.
    pub fn release(&self, run: Run) {
        let mut blocks = self.blocks.borrow_mut();
        let b = self.config.block();
        for idx in run.first_block..run.first_block + run.block_count(b) {
            if let Some(slot) = blocks.get_mut(idx) {
                *slot = None;
            }
        }
    }

    /// Copies a run out of the simulation without charging transfers.
    ///
    /// For verification and reporting only; algorithms must not use it.
    pub fn peek(&self, run: Run) -> Result<Vec<R>, Error> {
        let blocks = self.blocks.borrow();
        let b = self.config.block();
        let mut out = Vec::with_capacity(run.len);
        for idx in run.first_block..run.first_block + run.block_count(b) {
            let block = blocks
                .get(idx)
                .and_then(Option::as_ref)
                .ok_or(Error::UnknownBlock(idx))?;
            out.extend_from_slice(block);
        }
        out.truncate(run.len);
        Ok(out)
    }

    /// Opens a writer appending a new run at the end of the disk.
    pub fn writer(&self) -> Result<RunWriter<'_, R>, Error> {
        RunWriter::new(self)
    }

    /// Writes all records of `items` as a new run.
    pub fn write_run<I: IntoIterator<Item = R>>(&self, items: I) -> Result<Run, Error> {
        let mut w = self.writer()?;
        for r in items {
            w.push(r)?;
        }
        w.finish()
    }

    pub fn reader(&self, run: Run) -> Result<RunReader<'_, R>, Error> {
        RunReader::new(self, run)
    }

    /// Visits every record of `run` in order, charging one read per block.
    pub fn scan<F>(&self, run: Run, mut visit: F) -> Result<(), Error>
    where
        F: FnMut(&R) -> Result<(), Error>,
    {
        if run.is_empty() {
            return Ok(());
        }
        let b = self.config.block();
        let _buffer = self.reserve(b)?;
        let mut buf = Vec::with_capacity(b);
        let mut remaining = run.len;
        for idx in run.first_block..run.first_block + run.block_count(b) {
            self.read_into(idx, &mut buf)?;
            let take = remaining.min(buf.len());
            for r in &buf[..take] {
                visit(r)?;
            }
            remaining -= take;
        }
        Ok(())
    }

    /// Sorts `run` by `key` into a new run using multiway merge sort.
    ///
    /// Run formation reads and writes every block once; each of the
    /// [`IoConfig::merge_passes`] merge passes does the same. The cost does
    /// not depend on the data. Needs the whole internal memory, so callers
    /// must not hold reservations across a sort.
    pub fn external_sort<K, F>(&self, run: Run, key: F) -> Result<Run, Error>
    where
        K: Ord,
        F: Fn(&R) -> K,
    {
        if run.is_empty() {
            return Ok(Run::EMPTY);
        }
        let b = self.config.block();
        let chunk = self.config.sort_chunk();

        let mut runs = Vec::new();
        {
            let _memory = self.reserve(chunk)?;
            let mut buf: Vec<R> = Vec::with_capacity(chunk);
            let mut block = Vec::with_capacity(b);
            let mut remaining = run.len;
            let total_blocks = run.block_count(b);
            let mut idx = run.first_block;
            let end = run.first_block + total_blocks;
            while idx < end {
                buf.clear();
                while idx < end && buf.len() + b <= chunk {
                    self.read_into(idx, &mut block)?;
                    let take = remaining.min(block.len());
                    buf.extend_from_slice(&block[..take]);
                    remaining -= take;
                    idx += 1;
                }
                buf.sort_by_key(|r| key(r));
                runs.push(self.write_sorted_chunk(&buf)?);
            }
        }

        let fan_in = self.config.merge_fan_in();
        while runs.len() > 1 {
            let mut next = Vec::with_capacity(runs.len().div_ceil(fan_in));
            for group in runs.chunks(fan_in) {
                let merged = self.merge_runs(group, &key)?;
                for r in group {
                    self.release(*r);
                }
                next.push(merged);
            }
            runs = next;
        }
        Ok(runs[0])
    }

    fn write_sorted_chunk(&self, records: &[R]) -> Result<Run, Error> {
        if self.writer_open.get() {
            return Err(Error::InvalidParameter("a run writer is already open"));
        }
        let b = self.config.block();
        let first_block = self.block_count();
        for (n, piece) in records.chunks(b).enumerate() {
            self.write_block(first_block + n, piece.to_vec())?;
        }
        Ok(Run {
            first_block,
            len: records.len(),
        })
    }

    fn merge_runs<K, F>(&self, group: &[Run], key: &F) -> Result<Run, Error>
    where
        K: Ord,
        F: Fn(&R) -> K,
    {
        let mut readers = Vec::with_capacity(group.len());
        for r in group {
            readers.push(self.reader(*r)?);
        }
        let mut out = self.writer()?;
        let mut heap = BinaryHeap::with_capacity(readers.len());
        for (i, rd) in readers.iter_mut().enumerate() {
            if let Some(rec) = rd.peek()? {
                heap.push(Reverse((key(rec), i)));
            }
        }
        while let Some(Reverse((_, i))) = heap.pop() {
            let rec = readers[i].next()?.expect("peeked record");
            out.push(rec)?;
            if let Some(rec) = readers[i].peek()? {
                heap.push(Reverse((key(rec), i)));
            }
        }
        out.finish()
    }
}

/// Sequential writer for one run; holds a one-block buffer.
pub struct RunWriter<'a, R: Clone> {
    disk: &'a SimDisk<R>,
    first_block: usize,
    written_blocks: usize,
    len: usize,
    buf: Vec<R>,
    _buffer: MemGuard<'a>,
}

impl<'a, R: Clone> RunWriter<'a, R> {
    fn new(disk: &'a SimDisk<R>) -> Result<Self, Error> {
        if disk.writer_open.get() {
            return Err(Error::InvalidParameter("a run writer is already open"));
        }
        let b = disk.config.block();
        let guard = disk.reserve(b)?;
        disk.writer_open.set(true);
        Ok(RunWriter {
            disk,
            first_block: disk.block_count(),
            written_blocks: 0,
            len: 0,
            buf: Vec::with_capacity(b),
            _buffer: guard,
        })
    }

    pub fn push(&mut self, record: R) -> Result<(), Error> {
        self.buf.push(record);
        self.len += 1;
        if self.buf.len() == self.disk.config.block() {
            self.flush()?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn flush(&mut self) -> Result<(), Error> {
        let b = self.disk.config.block();
        let payload = core::mem::replace(&mut self.buf, Vec::with_capacity(b));
        self.disk
            .write_block(self.first_block + self.written_blocks, payload)?;
        self.written_blocks += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<Run, Error> {
        if !self.buf.is_empty() {
            self.flush()?;
        }
        let run = if self.len == 0 {
            Run::EMPTY
        } else {
            Run {
                first_block: self.first_block,
                len: self.len,
            }
        };
        Ok(run)
    }
}

impl<R: Clone> Drop for RunWriter<'_, R> {
    fn drop(&mut self) {
        self.disk.writer_open.set(false);
    }
}

/// Sequential reader over one run; holds a one-block buffer.
pub struct RunReader<'a, R: Clone> {
    disk: &'a SimDisk<R>,
    run: Run,
    next_block: usize,
    consumed: usize,
    buf: Vec<R>,
    pos: usize,
    _buffer: MemGuard<'a>,
}

impl<'a, R: Clone> RunReader<'a, R> {
    fn new(disk: &'a SimDisk<R>, run: Run) -> Result<Self, Error> {
        let b = disk.config.block();
        let guard = disk.reserve(b)?;
        Ok(RunReader {
            disk,
            run,
            next_block: run.first_block,
            consumed: 0,
            buf: Vec::with_capacity(b),
            pos: 0,
            _buffer: guard,
        })
    }

    fn fill(&mut self) -> Result<bool, Error> {
        if self.pos < self.buf.len() {
            return Ok(true);
        }
        if self.consumed >= self.run.len {
            return Ok(false);
        }
        self.disk.read_into(self.next_block, &mut self.buf)?;
        self.next_block += 1;
        let left = self.run.len - self.consumed;
        self.buf.truncate(left);
        self.pos = 0;
        Ok(!self.buf.is_empty())
    }

    pub fn peek(&mut self) -> Result<Option<&R>, Error> {
        if self.fill()? {
            Ok(self.buf.get(self.pos))
        } else {
            Ok(None)
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> Result<Option<R>, Error> {
        if self.fill()? {
            let r = self.buf[self.pos].clone();
            self.pos += 1;
            self.consumed += 1;
            Ok(Some(r))
        } else {
            Ok(None)
        }
    }
}
