//! Binary forest container.
//!
//! Little-endian layout: magic `XRFC`, `u16` version, `u32` feature count,
//! `u32` tree count, then per tree a `u32` node count followed by its nodes
//! in preorder. A split node is tag `0`, `u32` feature, `f64` threshold; its
//! left subtree follows immediately, then its right subtree. A leaf is tag
//! `1` and four `u32` class counts.

use super::forest::{Forest, Node, Tree};
use crate::raster::N_CLASSES;
use crate::{Error, Result};

pub const FOREST_MAGIC: &[u8; 4] = b"XRFC";
pub const FOREST_VERSION: u16 = 1;

pub fn encode_forest(forest: &Forest) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(FOREST_MAGIC);
    out.extend_from_slice(&FOREST_VERSION.to_le_bytes());
    out.extend_from_slice(&(forest.d as u32).to_le_bytes());
    out.extend_from_slice(&(forest.trees.len() as u32).to_le_bytes());
    for tree in &forest.trees {
        out.extend_from_slice(&(tree.nodes.len() as u32).to_le_bytes());
        encode_node(tree, 0, &mut out);
    }
    out
}

fn encode_node(tree: &Tree, i: usize, out: &mut Vec<u8>) {
    match &tree.nodes[i] {
        Node::Split { feature, threshold, left, right } => {
            out.push(0);
            out.extend_from_slice(&feature.to_le_bytes());
            out.extend_from_slice(&threshold.to_le_bytes());
            encode_node(tree, *left as usize, out);
            encode_node(tree, *right as usize, out);
        }
        Node::Leaf { counts } => {
            out.push(1);
            for c in counts {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Corrupt("forest stream ends early".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_forest(bytes: &[u8]) -> Result<Forest> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4).ok() != Some(FOREST_MAGIC.as_slice()) {
        return Err(Error::UnsupportedFormat("not an XRFC forest".into()));
    }
    let version = r.u16()?;
    if version != FOREST_VERSION {
        return Err(Error::UnsupportedFormat(format!("XRFC version {version}")));
    }
    let d = r.u32()? as usize;
    let n_trees = r.u32()? as usize;
    let mut trees = Vec::with_capacity(n_trees.min(1 << 16));
    for _ in 0..n_trees {
        let n_nodes = r.u32()? as usize;
        let mut nodes = Vec::with_capacity(n_nodes.min(1 << 20));
        decode_node(&mut r, &mut nodes, d, n_nodes)?;
        if nodes.len() != n_nodes {
            return Err(Error::Corrupt(format!("tree declares {n_nodes} nodes, found {}", nodes.len())));
        }
        trees.push(Tree { nodes });
    }
    if r.pos != bytes.len() {
        return Err(Error::Corrupt("trailing bytes after forest".into()));
    }
    Ok(Forest { d, trees })
}

fn decode_node(r: &mut Reader<'_>, nodes: &mut Vec<Node>, d: usize, limit: usize) -> Result<u32> {
    if nodes.len() >= limit {
        return Err(Error::Corrupt("tree has more nodes than declared".into()));
    }
    let id = nodes.len() as u32;
    match r.u8()? {
        0 => {
            let feature = r.u32()?;
            if feature as usize >= d {
                return Err(Error::Corrupt(format!("split feature {feature} >= {d}")));
            }
            let threshold = r.f64()?;
            nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
            let left = decode_node(r, nodes, d, limit)?;
            let right = decode_node(r, nodes, d, limit)?;
            nodes[id as usize] = Node::Split { feature, threshold, left, right };
        }
        1 => {
            let mut counts = [0u32; N_CLASSES];
            for c in &mut counts {
                *c = r.u32()?;
            }
            if counts.iter().all(|&c| c == 0) {
                return Err(Error::Corrupt("empty leaf histogram".into()));
            }
            nodes.push(Node::Leaf { counts });
        }
        tag => return Err(Error::Corrupt(format!("unknown node tag {tag}"))),
    }
    Ok(id)
}
