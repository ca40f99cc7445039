//! Union-find over the pair graph `H`: coupons joined by size-2 samples.
//!
//! A size-1 sample attaches its coupon to a virtual, already known triple,
//! modelled as an `anchored` flag on the component. A component's labels are
//! all deducible iff it has at least three coupons or is anchored.

#[derive(Debug, Clone)]
pub struct PairComponents {
    parent: Vec<u32>,
    size: Vec<u32>,
    anchored: Vec<bool>,
    known_count: usize,
}

impl PairComponents {
    pub fn new(n: usize) -> Self {
        PairComponents {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            anchored: vec![false; n],
            known_count: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    fn root(&self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            x = self.parent[x] as usize;
        }
        x
    }

    fn known_mass(&self, root: usize) -> usize {
        if self.size[root] >= 3 || self.anchored[root] {
            self.size[root] as usize
        } else {
            0
        }
    }

    /// A sample of size one.
    pub fn absorb_single(&mut self, c: usize) {
        let r = self.find(c);
        let before = self.known_mass(r);
        self.anchored[r] = true;
        self.known_count += self.known_mass(r) - before;
    }

    /// A sample of size two.
    pub fn absorb_pair(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let before = self.known_mass(ra) + self.known_mass(rb);
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big as u32;
        self.size[big] += self.size[small];
        self.anchored[big] |= self.anchored[small];
        self.known_count = self.known_count + self.known_mass(big) - before;
    }

    pub fn is_known(&self, c: usize) -> bool {
        self.known_mass(self.root(c)) > 0
    }

    pub fn known_count(&self) -> usize {
        self.known_count
    }

    /// Size of the component containing `c` (virtual anchors not counted).
    pub fn component_size(&self, c: usize) -> usize {
        self.size[self.root(c)] as usize
    }
}
