//! Discrete torus `(Z/NZ)^d`, occupancy configurations and the elementary
//! moves of the particle system.
//!
//! Sites are linearised row-major: the last coordinate varies fastest.
//! Window patterns list the offsets of the cube `{-r..r}^d` in lexicographic
//! order and store the occupancy of the `i`-th offset in bit `i`.

use crate::error::{domain, Error, Result};

/// `d`-dimensional torus with `N` sites per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGeometry {
    dim: usize,
    side: usize,
}

impl TorusGeometry {
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        if dim == 0 {
            return domain("dimension must be at least 1");
        }
        if side < 2 {
            return domain(format!("side length must be at least 2, got {side}"));
        }
        let fits = (0..dim).try_fold(1usize, |acc, _| acc.checked_mul(side));
        if fits.is_none() {
            return Err(Error::Capacity(format!("{side}^{dim} sites overflow")));
        }
        Ok(Self { dim, side })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn num_sites(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        let mut s = site;
        for i in (0..self.dim).rev() {
            c[i] = s % self.side;
            s /= self.side;
        }
        c
    }

    /// Linear index of (possibly out-of-range, possibly negative) coordinates.
    pub fn site_at(&self, coords: &[i64]) -> usize {
        let n = self.side as i64;
        coords
            .iter()
            .fold(0usize, |acc, &c| acc * self.side + c.rem_euclid(n) as usize)
    }

    pub fn shift(&self, site: usize, offset: &[i64]) -> usize {
        let c: Vec<i64> = self
            .coords(site)
            .into_iter()
            .zip(offset)
            .map(|(a, &o)| a as i64 + o)
            .collect();
        self.site_at(&c)
    }

    /// Group addition of two sites viewed as elements of `(Z/NZ)^d`.
    pub fn add(&self, a: usize, b: usize) -> usize {
        let cb: Vec<i64> = self.coords(b).into_iter().map(|x| x as i64).collect();
        self.shift(a, &cb)
    }

    /// Neighbours in the order `+e_1, -e_1, +e_2, -e_2, ...`.
    pub fn neighbors(&self, site: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * self.dim);
        let mut e = vec![0i64; self.dim];
        for i in 0..self.dim {
            e[i] = 1;
            out.push(self.shift(site, &e));
            e[i] = -1;
            out.push(self.shift(site, &e));
            e[i] = 0;
        }
        out
    }

    /// Flat table of [`Self::neighbors`], `2d` entries per site.
    pub fn neighbor_table(&self) -> Vec<usize> {
        (0..self.num_sites())
            .flat_map(|s| self.neighbors(s))
            .collect()
    }

    pub fn are_neighbors(&self, x: usize, y: usize) -> bool {
        x != y && self.neighbors(x).contains(&y)
    }

    /// Unordered nearest-neighbour pairs, each listed once as
    /// `(x, x + e_axis)`. For `N = 2` the `+e` and `-e` neighbours coincide and
    /// the pair is kept only once.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut e = vec![0i64; self.dim];
        for x in 0..self.num_sites() {
            let c = self.coords(x);
            for axis in 0..self.dim {
                if self.side == 2 && c[axis] == 1 {
                    continue;
                }
                e[axis] = 1;
                out.push((x, self.shift(x, &e)));
                e[axis] = 0;
            }
        }
        out
    }

    pub fn check_site(&self, x: usize) -> Result<()> {
        if x >= self.num_sites() {
            return domain(format!(
                "site {x} outside torus of {} sites",
                self.num_sites()
            ));
        }
        Ok(())
    }
}

/// Cube `{-r, .., r}^d` of offsets, sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalWindow {
    dim: usize,
    radius: usize,
    offsets: Vec<Vec<i64>>,
}

impl LocalWindow {
    pub fn new(dim: usize, radius: usize) -> Self {
        let r = radius as i64;
        let mut offsets: Vec<Vec<i64>> = vec![Vec::new()];
        for _ in 0..dim {
            offsets = offsets
                .into_iter()
                .flat_map(|prefix| {
                    (-r..=r).map(move |o| {
                        let mut p = prefix.clone();
                        p.push(o);
                        p
                    })
                })
                .collect();
        }
        offsets.sort();
        Self {
            dim,
            radius,
            offsets,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn offsets(&self) -> &[Vec<i64>] {
        &self.offsets
    }

    pub fn size(&self) -> usize {
        self.offsets.len()
    }

    /// Bit index of the origin; the cube is symmetric so it sits in the middle.
    pub fn origin_bit(&self) -> usize {
        self.offsets.len() / 2
    }

    /// Bit index of an offset, if it belongs to the window.
    pub fn bit_of(&self, offset: &[i64]) -> Option<usize> {
        self.offsets
            .binary_search_by(|o| o.as_slice().cmp(offset))
            .ok()
    }

    /// Number of distinct patterns, `2^((2r+1)^d)`; `None` beyond 2^31.
    pub fn num_patterns(&self) -> Option<usize> {
        (self.size() < 32).then(|| 1usize << self.size())
    }
}

/// Occupancy state `eta` in `{0,1}^(torus)`, stored as packed bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    geometry: TorusGeometry,
    bits: Vec<u64>,
}

impl Configuration {
    pub fn empty(geometry: TorusGeometry) -> Self {
        let words = geometry.num_sites().div_ceil(64);
        Self {
            geometry,
            bits: vec![0; words],
        }
    }

    pub fn full(geometry: TorusGeometry) -> Self {
        let mut c = Self::empty(geometry);
        for x in 0..geometry.num_sites() {
            c.set(x, true);
        }
        c
    }

    pub fn from_occupancy(geometry: TorusGeometry, occupancy: &[u8]) -> Result<Self> {
        if occupancy.len() != geometry.num_sites() {
            return domain(format!(
                "expected {} occupancies, got {}",
                geometry.num_sites(),
                occupancy.len()
            ));
        }
        let mut c = Self::empty(geometry);
        for (x, &v) in occupancy.iter().enumerate() {
            match v {
                0 => {}
                1 => c.set(x, true),
                _ => return domain(format!("occupancy at site {x} is {v}, not 0 or 1")),
            }
        }
        Ok(c)
    }

    /// Configuration whose bit `x` equals bit `x` of `index` (tiny lattices).
    pub fn from_index(geometry: TorusGeometry, index: usize) -> Self {
        let mut c = Self::empty(geometry);
        for x in 0..geometry.num_sites() {
            c.set(x, (index >> x) & 1 == 1);
        }
        c
    }

    pub fn to_index(&self) -> usize {
        (0..self.geometry.num_sites())
            .filter(|&x| self.get(x))
            .fold(0, |acc, x| acc | (1 << x))
    }

    pub fn geometry(&self) -> TorusGeometry {
        self.geometry
    }

    #[inline]
    pub fn get(&self, x: usize) -> bool {
        (self.bits[x / 64] >> (x % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: usize, occupied: bool) {
        let mask = 1u64 << (x % 64);
        if occupied {
            self.bits[x / 64] |= mask;
        } else {
            self.bits[x / 64] &= !mask;
        }
    }

    pub fn occupancy(&self) -> Vec<u8> {
        (0..self.geometry.num_sites())
            .map(|x| self.get(x) as u8)
            .collect()
    }

    pub fn particle_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `eta^{x,y}`: occupancies of the neighbouring sites `x` and `y` swapped.
    pub fn exchange(&self, x: usize, y: usize) -> Result<Self> {
        self.geometry.check_site(x)?;
        self.geometry.check_site(y)?;
        if !self.geometry.are_neighbors(x, y) {
            return domain(format!("sites {x} and {y} are not nearest neighbours"));
        }
        let mut out = self.clone();
        out.set(x, self.get(y));
        out.set(y, self.get(x));
        Ok(out)
    }

    /// `eta^x`: occupancy at `x` complemented.
    pub fn flip(&self, x: usize) -> Result<Self> {
        self.geometry.check_site(x)?;
        let mut out = self.clone();
        out.set(x, !self.get(x));
        Ok(out)
    }

    /// `(tau_x eta)_z = eta_{z+x}`.
    pub fn translate(&self, x: usize) -> Self {
        let g = self.geometry;
        let mut out = Self::empty(g);
        for z in 0..g.num_sites() {
            out.set(z, self.get(g.add(z, x)));
        }
        out
    }

    /// Pattern of `tau_x eta` on the window: bit `i` is `eta_{x + offset_i}`.
    pub fn read_window(&self, x: usize, window: &LocalWindow) -> usize {
        window
            .offsets()
            .iter()
            .enumerate()
            .filter(|(_, o)| self.get(self.geometry.shift(x, o)))
            .fold(0, |acc, (i, _)| acc | (1 << i))
    }

    /// Pairing `<alpha^N, phi> = N^{-d} sum_x eta_x phi(x/N)`.
    pub fn pair(&self, phi: impl Fn(&[f64]) -> f64) -> f64 {
        let g = self.geometry;
        let n = g.side() as f64;
        let mut v = vec![0.0; g.dim()];
        let mut acc = 0.0;
        for x in (0..g.num_sites()).filter(|&x| self.get(x)) {
            for (vi, c) in v.iter_mut().zip(g.coords(x)) {
                *vi = c as f64 / n;
            }
            acc += phi(&v);
        }
        acc / g.num_sites() as f64
    }

    /// Snapshot format: `d` and `N` as little-endian `u32`, then the packed
    /// bits in row-major site order, least significant bit first.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.geometry.num_sites();
        let mut out = Vec::with_capacity(8 + n.div_ceil(8));
        out.extend_from_slice(&(self.geometry.dim() as u32).to_le_bytes());
        out.extend_from_slice(&(self.geometry.side() as u32).to_le_bytes());
        for chunk in 0..n.div_ceil(8) {
            let word = self.bits[chunk / 8];
            out.push((word >> (8 * (chunk % 8))) as u8);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 {
            return Err(Error::Format("snapshot shorter than its header".into()));
        }
        let dim = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        let side = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let geometry = TorusGeometry::new(dim, side)?;
        let n = geometry.num_sites();
        let body = &bytes[8..];
        if body.len() != n.div_ceil(8) {
            return Err(Error::Format(format!(
                "expected {} payload bytes, got {}",
                n.div_ceil(8),
                body.len()
            )));
        }
        let mut c = Self::empty(geometry);
        for (i, &b) in body.iter().enumerate() {
            c.bits[i / 8] |= (b as u64) << (8 * (i % 8));
        }
        if n % 64 != 0 && c.bits[n / 64] >> (n % 64) != 0 {
            return Err(Error::Format("padding bits are not zero".into()));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, occ: &[u8]) -> Configuration {
        Configuration::from_occupancy(TorusGeometry::new(1, n).unwrap(), occ).unwrap()
    }

    #[test]
    fn geometry_counts() {
        let g = TorusGeometry::new(2, 5).unwrap();
        assert_eq!(g.num_sites(), 25);
        for x in 0..25 {
            let mut nb = g.neighbors(x);
            nb.sort();
            nb.dedup();
            assert_eq!(nb.len(), 4);
            for y in nb {
                assert!(g.neighbors(y).contains(&x));
            }
        }
        assert_eq!(g.bonds().len(), 50);
        assert_eq!(TorusGeometry::new(2, 2).unwrap().bonds().len(), 4);
        assert!(TorusGeometry::new(1, 1).is_err());
    }

    #[test]
    fn exchange_examples() {
        let eta = line(4, &[1, 0, 0, 0]);
        assert_eq!(eta.exchange(0, 1).unwrap().occupancy(), vec![0, 1, 0, 0]);
        let same = line(4, &[1, 1, 0, 0]);
        assert_eq!(same.exchange(0, 1).unwrap(), same);
        assert!(eta.exchange(0, 2).is_err());

        let g = TorusGeometry::new(2, 3).unwrap();
        let mut eta = Configuration::empty(g);
        eta.set(g.site_at(&[0, 0]), true);
        let moved = eta
            .exchange(g.site_at(&[0, 0]), g.site_at(&[0, 2]))
            .unwrap();
        assert!(moved.get(g.site_at(&[0, 2])));
        assert_eq!(moved.particle_count(), 1);
    }

    #[test]
    fn flip_examples() {
        let eta = line(4, &[0, 0, 0, 0]);
        assert_eq!(eta.flip(2).unwrap().occupancy(), vec![0, 0, 1, 0]);
        assert!(eta.flip(4).is_err());
    }

    #[test]
    fn translate_examples() {
        let eta = line(4, &[1, 0, 0, 0]);
        assert_eq!(eta.translate(0), eta);
        assert_eq!(eta.translate(1).occupancy(), vec![0, 0, 0, 1]);
    }

    #[test]
    fn window_examples() {
        let w = LocalWindow::new(1, 1);
        assert_eq!(w.offsets(), &[vec![-1], vec![0], vec![1]]);
        assert_eq!(w.origin_bit(), 1);
        let eta = line(4, &[1, 0, 1, 0]);
        // (eta_{-1}, eta_0, eta_1) = (0, 1, 0)
        assert_eq!(eta.read_window(0, &w), 0b010);
        assert_eq!(line(4, &[0; 4]).read_window(2, &w), 0);
        assert_eq!(line(4, &[1; 4]).read_window(2, &w), 0b111);

        let w2 = LocalWindow::new(2, 1);
        assert_eq!(w2.size(), 9);
        assert_eq!(w2.offsets()[w2.origin_bit()], vec![0, 0]);
    }

    #[test]
    fn snapshot_layout() {
        let eta = line(10, &[1, 0, 0, 0, 0, 0, 0, 0, 0, 1]);
        let bytes = eta.to_bytes();
        assert_eq!(&bytes[..8], &[1, 0, 0, 0, 10, 0, 0, 0]);
        assert_eq!(&bytes[8..], &[0b0000_0001, 0b0000_0010]);
        assert_eq!(Configuration::from_bytes(&bytes).unwrap(), eta);
        assert!(Configuration::from_bytes(&bytes[..9]).is_err());
    }
}
