//! Partition-based block sampling schemes.
//!
//! A [`SamplingScheme`] is a finite probability space over the blocks of a
//! [`Partition`] of the rows (or columns) of `A`. Block `i` is drawn with
//! probability `‖A_block‖_F² / ‖A‖_F²`; the sampling matrix it stands for is
//! the column selector of the block scaled by `1 / ‖A_block‖_F`, which is
//! never formed explicitly.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::rng_from_seed;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    dim: usize,
    block_size: usize,
    seed: Option<u64>,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Splits a uniformly random permutation of `0..dim` into consecutive
    /// blocks of `p` indices; the last block holds the remainder.
    pub fn random<R: Rng + ?Sized>(dim: usize, p: usize, rng: &mut R) -> Result<Self> {
        if p < 1 || p > dim {
            return Err(Error::BlockSize { p, dim });
        }
        let mut perm: Vec<usize> = (0..dim).collect();
        perm.shuffle(rng);
        Ok(Self::chunked(dim, p, perm, None))
    }

    /// Same as [`Partition::random`] with a generator built from `seed`, which is recorded.
    pub fn random_seeded(dim: usize, p: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let mut part = Self::random(dim, p, &mut rng)?;
        part.seed = Some(seed);
        Ok(part)
    }

    /// Blocks of consecutive indices `{0..p}, {p..2p}, ...` (identity permutation).
    pub fn contiguous(dim: usize, p: usize) -> Result<Self> {
        if p < 1 || p > dim {
            return Err(Error::BlockSize { p, dim });
        }
        Ok(Self::chunked(dim, p, (0..dim).collect(), None))
    }

    fn chunked(dim: usize, p: usize, perm: Vec<usize>, seed: Option<u64>) -> Self {
        let blocks = perm.chunks(p).map(<[usize]>::to_vec).collect();
        Self {
            dim,
            block_size: p,
            seed,
            blocks,
        }
    }

    /// Validates that `blocks` are disjoint, nonempty, and cover `0..dim`.
    pub fn from_blocks(dim: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; dim];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::Config("partition contains an empty block".into()));
            }
            for &i in block {
                if i >= dim {
                    return Err(Error::IndexOutOfRange { index: i, dim });
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Config(format!("index {i} appears in two blocks")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Config(format!("index {missing} is not covered by the partition")));
        }
        let block_size = blocks.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self {
            dim,
            block_size,
            seed: None,
            blocks,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// One block per line, 1-based indices separated by single spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for block in &self.blocks {
            let line: Vec<String> = block.iter().map(|i| (i + 1).to_string()).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
        out
    }

    pub fn from_text(dim: usize, text: &str, origin: &Path) -> Result<Self> {
        let mut blocks = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let block = line
                .split_whitespace()
                .map(|tok| match tok.parse::<usize>() {
                    Ok(i) if i >= 1 => Ok(i - 1),
                    _ => Err(Error::parse(origin, lineno + 1, format!("bad index `{tok}`"))),
                })
                .collect::<Result<Vec<_>>>()?;
            blocks.push(block);
        }
        Self::from_blocks(dim, blocks)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Row,
    Column,
}

/// One sampled block: its id, indices, and squared Frobenius norm.
#[derive(Clone, Copy, Debug)]
pub struct BlockDraw<'a> {
    pub block_id: usize,
    pub indices: &'a [usize],
    pub fro_norm_sq: f64,
}

#[derive(Clone, Debug)]
pub struct SamplingScheme {
    partition: Partition,
    axis: Axis,
    probabilities: Vec<f64>,
    block_fro_norms_sq: Vec<f64>,
    total_fro_sq: f64,
    cumulative: Vec<f64>,
}

impl SamplingScheme {
    /// Builds the block-norm-proportional scheme of `partition` over the rows
    /// or columns of `a`. Zero-norm blocks get probability 0.
    pub fn new(a: &Matrix, partition: Partition, axis: Axis) -> Result<Self> {
        let dim = match axis {
            Axis::Row => a.nrows(),
            Axis::Column => a.ncols(),
        };
        if partition.dim() != dim {
            return Err(Error::Dimension(format!(
                "partition covers {} indices but the {:?} dimension is {dim}",
                partition.dim(),
                axis
            )));
        }
        let block_fro_norms_sq = partition
            .blocks()
            .iter()
            .map(|blk| match axis {
                Axis::Row => a.row_block_fro_sq(blk),
                Axis::Column => a.col_block_fro_sq(blk),
            })
            .collect::<Result<Vec<f64>>>()?;
        let total_fro_sq: f64 = block_fro_norms_sq.iter().sum();
        if total_fro_sq <= 0.0 {
            return Err(Error::DegenerateSampling);
        }
        let probabilities: Vec<f64> = block_fro_norms_sq.iter().map(|f| f / total_fro_sq).collect();
        let mut cumulative = Vec::with_capacity(probabilities.len());
        let mut acc = 0.0;
        for &p in &probabilities {
            acc += p;
            cumulative.push(acc);
        }
        let last = probabilities.iter().rposition(|&p| p > 0.0).expect("total is positive");
        for c in &mut cumulative[last..] {
            *c = 1.0;
        }
        Ok(Self {
            partition,
            axis,
            probabilities,
            block_fro_norms_sq,
            total_fro_sq,
            cumulative,
        })
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn block_fro_norms_sq(&self) -> &[f64] {
        &self.block_fro_norms_sq
    }

    pub fn total_fro_sq(&self) -> f64 {
        self.total_fro_sq
    }

    pub fn num_blocks(&self) -> usize {
        self.probabilities.len()
    }

    pub fn block(&self, block_id: usize) -> BlockDraw<'_> {
        BlockDraw {
            block_id,
            indices: &self.partition.blocks()[block_id],
            fro_norm_sq: self.block_fro_norms_sq[block_id],
        }
    }

    /// Inverse-CDF draw of one block.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> BlockDraw<'_> {
        let u: f64 = rng.random();
        let id = self.cumulative.partition_point(|&c| c <= u);
        self.block(id.min(self.cumulative.len() - 1))
    }

    /// Blocks with nonzero probability, with their probabilities.
    pub fn support(&self) -> impl Iterator<Item = (BlockDraw<'_>, f64)> + '_ {
        (0..self.num_blocks())
            .filter(|&i| self.probabilities[i] > 0.0)
            .map(|i| (self.block(i), self.probabilities[i]))
    }
}
