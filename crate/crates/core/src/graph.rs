//! Edge-indexed Tanner graph.
//!
//! Edges are numbered in (check node, variable node) order, so the edges of
//! check node `m` are the contiguous range `cn_edges(m)`. Each lifted edge
//! remembers the base-graph edge and base row it was expanded from, which is
//! what weight sharing groups on.

use crate::code::ParityCheckMatrix;

#[derive(Debug, Clone)]
pub struct TannerGraph {
    n_vn: usize,
    n_cn: usize,
    z: usize,
    edge_vn: Vec<u32>,
    edge_cn: Vec<u32>,
    cn_ptr: Vec<usize>,
    vn_ptr: Vec<usize>,
    vn_edge_list: Vec<u32>,
    edge_base: Vec<u32>,
    edge_base_row: Vec<u32>,
    n_base_edges: usize,
    n_base_rows: usize,
}

impl TannerGraph {
    pub fn from_matrix(h: &ParityCheckMatrix) -> TannerGraph {
        let z = h.z();
        let n_vn = h.n_cols();
        let n_cn = h.n_rows();
        let blocks = h.blocks();
        let n_base_rows = n_cn / z;
        let n_base_cols = n_vn / z;

        let mut block_id = vec![u32::MAX; n_base_rows * n_base_cols];
        for (id, b) in blocks.iter().enumerate() {
            block_id[b.row * n_base_cols + b.col] = id as u32;
        }

        let n_edges = h.n_ones();
        let mut edge_vn = Vec::with_capacity(n_edges);
        let mut edge_cn = Vec::with_capacity(n_edges);
        let mut edge_base = Vec::with_capacity(n_edges);
        let mut edge_base_row = Vec::with_capacity(n_edges);
        let mut cn_ptr = Vec::with_capacity(n_cn + 1);
        cn_ptr.push(0);
        for (m, row) in h.rows().enumerate() {
            for &l in row {
                edge_vn.push(l as u32);
                edge_cn.push(m as u32);
                edge_base.push(block_id[(m / z) * n_base_cols + l / z]);
                edge_base_row.push((m / z) as u32);
            }
            cn_ptr.push(edge_vn.len());
        }

        let mut vn_deg = vec![0usize; n_vn];
        for &l in &edge_vn {
            vn_deg[l as usize] += 1;
        }
        let mut vn_ptr = Vec::with_capacity(n_vn + 1);
        vn_ptr.push(0);
        for d in &vn_deg {
            vn_ptr.push(vn_ptr.last().unwrap() + d);
        }
        let mut fill = vn_ptr.clone();
        let mut vn_edge_list = vec![0u32; n_edges];
        for (e, &l) in edge_vn.iter().enumerate() {
            vn_edge_list[fill[l as usize]] = e as u32;
            fill[l as usize] += 1;
        }

        TannerGraph {
            n_vn,
            n_cn,
            z,
            edge_vn,
            edge_cn,
            cn_ptr,
            vn_ptr,
            vn_edge_list,
            edge_base,
            edge_base_row,
            n_base_edges: blocks.len(),
            n_base_rows,
        }
    }

    pub fn n_vn(&self) -> usize {
        self.n_vn
    }

    pub fn n_cn(&self) -> usize {
        self.n_cn
    }

    /// N_msg, the number of edges.
    pub fn n_edges(&self) -> usize {
        self.edge_vn.len()
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn n_base_edges(&self) -> usize {
        self.n_base_edges
    }

    pub fn n_base_rows(&self) -> usize {
        self.n_base_rows
    }

    pub fn n_base_cols(&self) -> usize {
        self.n_vn / self.z
    }

    pub fn edge_vn(&self, e: usize) -> usize {
        self.edge_vn[e] as usize
    }

    pub fn edge_cn(&self, e: usize) -> usize {
        self.edge_cn[e] as usize
    }

    pub fn edge_vns(&self) -> &[u32] {
        &self.edge_vn
    }

    /// Edge range of V(m).
    pub fn cn_edges(&self, m: usize) -> std::ops::Range<usize> {
        self.cn_ptr[m]..self.cn_ptr[m + 1]
    }

    /// Edge ids of C(l).
    pub fn vn_edges(&self, l: usize) -> &[u32] {
        &self.vn_edge_list[self.vn_ptr[l]..self.vn_ptr[l + 1]]
    }

    pub fn base_edge(&self, e: usize) -> usize {
        self.edge_base[e] as usize
    }

    pub fn base_row(&self, e: usize) -> usize {
        self.edge_base_row[e] as usize
    }

    pub fn vn_base_col(&self, l: usize) -> usize {
        l / self.z
    }
}
