//! Visible-unit block arrangement and the look-up table replayed at inference.
//!
//! The visible layer is cut into image blocks (one per image row) and CSV
//! blocks (one per binarized tabular item). A [`BlockLayout`] orders those
//! blocks; concatenating their spans in layout order gives the arranged input.
//! During training, CSV blocks that co-fire with an image block are moved
//! next to it, and the resulting permutation is kept in a [`LookupTable`].

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rbm::{BinaryVector, RbmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Image,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    pub id: usize,
    /// Original input positions, in original order.
    pub span: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    blocks: Vec<Block>,
    n_positions: usize,
}

impl BlockLayout {
    /// Builds a layout, checking that the spans partition `0..I`.
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        let n_positions: usize = blocks.iter().map(|b| b.span.len()).sum();
        let mut seen = vec![false; n_positions];
        let mut ids = std::collections::HashSet::new();
        for block in &blocks {
            if block.span.is_empty() {
                return Err(Error::invalid(format!("block {} has an empty span", block.id)));
            }
            if !ids.insert(block.id) {
                return Err(Error::invalid(format!("duplicate block id {}", block.id)));
            }
            for &p in &block.span {
                match seen.get_mut(p) {
                    Some(s) if !*s => *s = true,
                    Some(_) => return Err(Error::invalid(format!("position {p} appears in more than one block"))),
                    None => {
                        return Err(Error::invalid(format!(
                            "position {p} outside 0..{n_positions}; spans must cover the input exactly"
                        )))
                    }
                }
            }
        }
        Ok(Self { blocks, n_positions })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn n_positions(&self) -> usize {
        self.n_positions
    }

    pub fn image_count(&self) -> usize {
        self.blocks.iter().filter(|b| b.kind == BlockKind::Image).count()
    }

    pub fn csv_count(&self) -> usize {
        self.blocks.iter().filter(|b| b.kind == BlockKind::Csv).count()
    }

    /// Slot index of the block with `id`.
    pub fn slot_of(&self, id: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.id == id)
    }

    /// Block ids in layout order.
    pub fn order(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.id).collect()
    }

    /// Arranged-coordinate range occupied by each slot.
    fn slot_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.blocks
            .iter()
            .map(|b| {
                let r = start..start + b.span.len();
                start = r.end;
                r
            })
            .collect()
    }

    fn move_after(&mut self, moving: usize, anchor: usize) {
        let from = self.slot_of(moving).expect("moving block in layout");
        let block = self.blocks.remove(from);
        let at = self.slot_of(anchor).expect("anchor block in layout") + 1;
        self.blocks.insert(at, block);
    }
}

/// Bijection from original input positions to arranged positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct LookupTable {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl LookupTable {
    pub fn identity(len: usize) -> Self {
        Self {
            forward: (0..len).collect(),
            inverse: (0..len).collect(),
        }
    }

    /// Builds a table from its forward map, rejecting non-permutations.
    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut inverse = vec![usize::MAX; n];
        for (orig, &arranged) in forward.iter().enumerate() {
            match inverse.get_mut(arranged) {
                Some(slot) if *slot == usize::MAX => *slot = orig,
                _ => return Err(Error::invalid(format!("forward map is not a permutation of 0..{n}"))),
            }
        }
        Ok(Self { forward, inverse })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &f)| i == f)
    }

    /// The table mapping arranged positions back to original positions.
    pub fn inverted(&self) -> LookupTable {
        LookupTable {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// `out[forward[i]] = raw[i]`.
    pub fn arrange<T: Copy>(&self, raw: &[T]) -> Result<Vec<T>> {
        check_len("input to look-up table", self.len(), raw.len())?;
        Ok(self.inverse.iter().map(|&orig| raw[orig]).collect())
    }

    /// For each position of the `next` arrangement, the position it held in `self`.
    pub fn transition_to(&self, next: &LookupTable) -> Result<Vec<usize>> {
        check_len("look-up table", self.len(), next.len())?;
        Ok(next.inverse.iter().map(|&orig| self.forward[orig]).collect())
    }
}

impl TryFrom<Vec<usize>> for LookupTable {
    type Error = Error;

    fn try_from(forward: Vec<usize>) -> Result<Self> {
        LookupTable::from_forward(forward)
    }
}

impl From<LookupTable> for Vec<usize> {
    fn from(t: LookupTable) -> Self {
        t.forward
    }
}

/// Interleaves image rows and CSV blocks (`r1, c1, r2, c2, ...`), appending
/// whichever list is longer. Image blocks get ids `0..K`, CSV blocks `K..K+L`.
pub fn initial_arrangement(image_rows: Vec<Vec<usize>>, csv_blocks: Vec<Vec<usize>>) -> Result<(BlockLayout, LookupTable)> {
    let k = image_rows.len();
    let mut images = image_rows
        .into_iter()
        .enumerate()
        .map(|(id, span)| Block { kind: BlockKind::Image, id, span });
    let mut csvs = csv_blocks
        .into_iter()
        .enumerate()
        .map(|(l, span)| Block { kind: BlockKind::Csv, id: k + l, span });
    let mut blocks = Vec::new();
    loop {
        match (images.next(), csvs.next()) {
            (None, None) => break,
            (a, b) => blocks.extend(a.into_iter().chain(b)),
        }
    }
    let layout = BlockLayout::new(blocks)?;
    let table = rebuild_table(&layout)?;
    Ok((layout, table))
}

/// Uniform pseudo-blocks over `width` units in natural order; the last
/// `csv_tail` blocks are tagged CSV.
pub fn pseudo_blocks(width: usize, block_len: usize, csv_tail: usize) -> Result<(BlockLayout, LookupTable)> {
    if width == 0 || block_len == 0 {
        return Err(Error::invalid("pseudo-blocks need a positive width and block length"));
    }
    let spans: Vec<Vec<usize>> = (0..width)
        .step_by(block_len)
        .map(|s| (s..(s + block_len).min(width)).collect())
        .collect();
    let n = spans.len();
    let tail = csv_tail.min(n.saturating_sub(1));
    let blocks = spans
        .into_iter()
        .enumerate()
        .map(|(id, span)| Block {
            kind: if id >= n - tail { BlockKind::Csv } else { BlockKind::Image },
            id,
            span,
        })
        .collect();
    let layout = BlockLayout::new(blocks)?;
    let table = rebuild_table(&layout)?;
    Ok((layout, table))
}

/// Original position → rank in the concatenation of spans in layout order.
pub fn rebuild_table(layout: &BlockLayout) -> Result<LookupTable> {
    let mut forward = vec![usize::MAX; layout.n_positions];
    let mut next = 0;
    for block in &layout.blocks {
        for &p in &block.span {
            if p >= forward.len() || forward[p] != usize::MAX {
                return Err(Error::Internal(format!("layout does not cover position {p} exactly once")));
            }
            forward[p] = next;
            next += 1;
        }
    }
    LookupTable::from_forward(forward).map_err(|e| Error::Internal(e.to_string()))
}

/// Hidden units that fired and have settled (WD below `wd_stable`).
pub fn stable_fired_hidden(h_state: &BinaryVector, wd: &[f64], wd_stable: f64) -> Result<Vec<usize>> {
    check_len("hidden WD", h_state.len(), wd.len())?;
    Ok(h_state
        .as_slice()
        .iter()
        .zip(wd)
        .enumerate()
        .filter(|(_, (&h, &w))| h == 1 && w < wd_stable)
        .map(|(j, _)| j)
        .collect())
}

/// Visible pattern generated by hidden unit `j` alone, in arranged
/// coordinates. A unit fires when its probability is strictly above 0.5.
pub fn downward_projection(j: usize, params: &RbmParams) -> Result<BinaryVector> {
    let nh = params.n_hidden();
    if j >= nh {
        return Err(Error::invalid(format!("hidden index {j} out of range for {nh} units")));
    }
    let mut h = vec![0.0; nh];
    h[j] = 1.0;
    Ok(BinaryVector::threshold(&params.visible_probs(&h)))
}

/// Candidate image and CSV block ids, each ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Candidates {
    pub image: Vec<usize>,
    pub csv: Vec<usize>,
}

/// Blocks whose fired fraction is at least `rho`.
pub fn candidate_blocks(pattern: &BinaryVector, layout: &BlockLayout, rho: f64) -> Result<Candidates> {
    check_len("firing pattern", layout.n_positions, pattern.len())?;
    let bits = pattern.as_slice();
    let mut out = Candidates::default();
    for (block, range) in layout.blocks.iter().zip(layout.slot_ranges()) {
        let len = range.len();
        let fired = bits[range].iter().filter(|&&b| b == 1).count();
        if fired > 0 && fired as f64 >= rho * len as f64 {
            match block.kind {
                BlockKind::Image => out.image.push(block.id),
                BlockKind::Csv => out.csv.push(block.id),
            }
        }
    }
    out.image.sort_unstable();
    out.csv.sort_unstable();
    Ok(out)
}

/// Layout slots within `radius` of the block's slot, excluding the slot itself.
pub fn neighborhood(layout: &BlockLayout, block_id: usize, radius: usize) -> Result<Vec<usize>> {
    let slot = layout
        .slot_of(block_id)
        .ok_or_else(|| Error::invalid(format!("block {block_id} not in layout")))?;
    let lo = slot.saturating_sub(radius);
    let hi = (slot + radius).min(layout.blocks.len() - 1);
    Ok((lo..=hi).filter(|&s| s != slot).collect())
}

/// One sorting pass. Each candidate image block, in id order, takes the
/// lowest-id CSV candidate still available. The CSV block is moved to the
/// slot right after the image block unless it is already in its
/// neighborhood; either way it is then paired and leaves the pool.
/// Returns the number of relocations; `table` is rebuilt when anything moved.
pub fn sort_step(
    layout: &mut BlockLayout,
    table: &mut LookupTable,
    candidates: &Candidates,
    radius: usize,
) -> Result<usize> {
    let mut pool: Vec<usize> = candidates.csv.clone();
    pool.sort_unstable();
    let mut moves = 0;
    let mut images = candidates.image.clone();
    images.sort_unstable();
    for image_id in images {
        if pool.is_empty() {
            break;
        }
        let csv_id = pool.remove(0);
        let near = neighborhood(layout, image_id, radius)?;
        let csv_slot = layout
            .slot_of(csv_id)
            .ok_or_else(|| Error::invalid(format!("block {csv_id} not in layout")))?;
        if !near.contains(&csv_slot) {
            layout.move_after(csv_id, image_id);
            moves += 1;
        }
    }
    if moves > 0 {
        *table = rebuild_table(layout)?;
    }
    Ok(moves)
}

/// Maps a raw input into arranged order.
pub fn apply_lookup(table: &LookupTable, raw: &BinaryVector) -> Result<BinaryVector> {
    BinaryVector::new(table.arrange(raw.as_slice())?)
}
