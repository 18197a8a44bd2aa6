//! Nine-point operators on a rectangle of interior nodes surrounded by one
//! layer of zero ghost nodes, plus the grid transfer operators.

/// Offsets are ordered `k = (di + 1) + 3(dj + 1)`.
pub(crate) const CENTER: usize = 4;

#[derive(Debug, Clone)]
pub(crate) struct Level {
    /// Interior nodes are `(i, j)` with `1 ≤ i ≤ mx`, `1 ≤ j ≤ my`.
    pub mx: usize,
    pub my: usize,
    pub stride: usize,
    pub a: Vec<[f64; 9]>,
    off: [isize; 9],
}

impl Level {
    pub fn zeros(mx: usize, my: usize) -> Self {
        let stride = mx + 2;
        let mut off = [0isize; 9];
        for (k, o) in off.iter_mut().enumerate() {
            let (di, dj) = (k as isize % 3 - 1, k as isize / 3 - 1);
            *o = di + dj * stride as isize;
        }
        Level { mx, my, stride, a: vec![[0.0; 9]; stride * (my + 2)], off }
    }

    pub fn len(&self) -> usize {
        self.stride * (self.my + 2)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i + j * self.stride
    }

    #[inline]
    fn nb(&self, f: usize, k: usize) -> usize {
        (f as isize + self.off[k]) as usize
    }

    /// `b − A x` and its max norm.
    pub fn residual(&self, x: &[f64], b: &[f64], r: &mut [f64]) -> f64 {
        let mut m = 0.0_f64;
        for j in 1..=self.my {
            for i in 1..=self.mx {
                let f = self.idx(i, j);
                let s = &self.a[f];
                let mut acc = b[f];
                for k in 0..9 {
                    acc -= s[k] * x[self.nb(f, k)];
                }
                r[f] = acc;
                m = m.max(acc.abs());
            }
        }
        m
    }

    /// One forward then one backward Gauss–Seidel sweep; `omega` over-relaxes.
    pub fn symmetric_gs(&self, x: &mut [f64], b: &[f64], omega: f64) -> f64 {
        let mut upd = 0.0_f64;
        for j in 1..=self.my {
            for i in 1..=self.mx {
                upd = upd.max(self.relax(x, b, self.idx(i, j), omega));
            }
        }
        for j in (1..=self.my).rev() {
            for i in (1..=self.mx).rev() {
                upd = upd.max(self.relax(x, b, self.idx(i, j), omega));
            }
        }
        upd
    }

    /// Forward sweep only.
    pub fn forward_gs(&self, x: &mut [f64], b: &[f64], omega: f64) -> f64 {
        let mut upd = 0.0_f64;
        for j in 1..=self.my {
            for i in 1..=self.mx {
                upd = upd.max(self.relax(x, b, self.idx(i, j), omega));
            }
        }
        upd
    }

    #[inline]
    fn relax(&self, x: &mut [f64], b: &[f64], f: usize, omega: f64) -> f64 {
        let s = &self.a[f];
        let mut acc = b[f];
        for k in 0..9 {
            if k != CENTER {
                acc -= s[k] * x[self.nb(f, k)];
            }
        }
        let new = acc / s[CENTER];
        let d = omega * (new - x[f]);
        x[f] += d;
        d.abs()
    }

    /// The operator with rows and columns exchanged.
    pub fn transpose(&self) -> Level {
        let mut t = Level::zeros(self.mx, self.my);
        for j in 1..=self.my {
            for i in 1..=self.mx {
                let f = self.idx(i, j);
                for k in 0..9 {
                    let g = self.nb(f, k);
                    // A(f, g) becomes Aᵀ(g, f), at offset 8 − k from g
                    t.a[g][8 - k] += self.a[f][k];
                }
            }
        }
        t.clear_ghosts();
        t
    }

    fn clear_ghosts(&mut self) {
        for j in 0..self.my + 2 {
            for i in 0..self.mx + 2 {
                if i == 0 || j == 0 || i > self.mx || j > self.my {
                    let f = self.idx(i, j);
                    self.a[f] = [0.0; 9];
                }
            }
        }
    }

    pub fn can_coarsen(&self) -> bool {
        self.mx >= 15 && self.my >= 15
    }

    /// Galerkin operator `Pᵀ A P` for bilinear interpolation `P` from the
    /// nodes with even fine coordinates.
    pub fn galerkin(&self) -> Level {
        let (cx, cy) = (self.mx / 2, self.my / 2);
        let mut c = Level::zeros(cx, cy);
        let mut parents_i = Vec::with_capacity(2);
        let mut parents_j = Vec::with_capacity(2);
        for cj in 1..=cy {
            for ci in 1..=cx {
                let cf = c.idx(ci, cj);
                let mut row = [0.0; 9];
                for b in -1i64..=1 {
                    for a in -1i64..=1 {
                        let (fi, fj) = (2 * ci as i64 + a, 2 * cj as i64 + b);
                        if fi < 1 || fj < 1 || fi > self.mx as i64 || fj > self.my as i64 {
                            continue;
                        }
                        let wf = (1.0 - 0.5 * a.abs() as f64) * (1.0 - 0.5 * b.abs() as f64);
                        let f = self.idx(fi as usize, fj as usize);
                        for k in 0..9 {
                            let v = self.a[f][k];
                            if v == 0.0 {
                                continue;
                            }
                            let gi = fi + k as i64 % 3 - 1;
                            let gj = fj + k as i64 / 3 - 1;
                            parents(gi, cx, &mut parents_i);
                            parents(gj, cy, &mut parents_j);
                            for &(pi, wi) in &parents_i {
                                for &(pj, wj) in &parents_j {
                                    let di = pi as i64 - ci as i64;
                                    let dj = pj as i64 - cj as i64;
                                    debug_assert!(di.abs() <= 1 && dj.abs() <= 1);
                                    row[((di + 1) + 3 * (dj + 1)) as usize] += wf * v * wi * wj;
                                }
                            }
                        }
                    }
                }
                c.a[cf] = row;
            }
        }
        c
    }

    /// `x_fine += P e_coarse`.
    pub fn prolong_add(&self, coarse: &Level, e: &[f64], x: &mut [f64]) {
        for j in 1..=self.my {
            for i in 1..=self.mx {
                let v = interp(i, j, coarse, e);
                let f = self.idx(i, j);
                x[f] += v;
            }
        }
    }

    /// `r_coarse = Pᵀ r_fine`.
    pub fn restrict(&self, coarse: &Level, r: &[f64], rc: &mut [f64]) {
        for v in rc.iter_mut() {
            *v = 0.0;
        }
        for cj in 1..=coarse.my {
            for ci in 1..=coarse.mx {
                let mut acc = 0.0;
                for b in -1i64..=1 {
                    for a in -1i64..=1 {
                        let (fi, fj) = (2 * ci as i64 + a, 2 * cj as i64 + b);
                        if fi > self.mx as i64 || fj > self.my as i64 {
                            continue;
                        }
                        let w = (1.0 - 0.5 * a.abs() as f64) * (1.0 - 0.5 * b.abs() as f64);
                        acc += w * r[self.idx(fi as usize, fj as usize)];
                    }
                }
                rc[coarse.idx(ci, cj)] = acc;
            }
        }
    }
}

/// Coarse parents of fine coordinate `g` with interpolation weights.
fn parents(g: i64, n: usize, out: &mut Vec<(usize, f64)>) {
    out.clear();
    if g % 2 == 0 {
        let p = g / 2;
        if p >= 1 && p <= n as i64 {
            out.push((p as usize, 1.0));
        }
    } else {
        for p in [(g - 1) / 2, (g + 1) / 2] {
            if p >= 1 && p <= n as i64 {
                out.push((p as usize, 0.5));
            }
        }
    }
}

#[inline]
fn interp(i: usize, j: usize, c: &Level, e: &[f64]) -> f64 {
    // parents past the last coarse node land on the zero ghost layer
    let par = |i: usize| -> [(usize, f64); 2] {
        if i % 2 == 0 {
            [(i / 2, 1.0), (i / 2, 0.0)]
        } else {
            [((i - 1) / 2, 0.5), (i.div_ceil(2), 0.5)]
        }
    };
    let mut v = 0.0;
    for (a, wa) in par(i) {
        for (b, wb) in par(j) {
            v += wa * wb * e[c.idx(a, b)];
        }
    }
    v
}

/// LU factors of a banded matrix, no pivoting (the coarse operators are
/// diagonally dominant in practice).
#[derive(Debug, Clone)]
pub(crate) struct BandLu {
    n: usize,
    bw: usize,
    /// Row-major band storage, `band[r][c − r + bw]`.
    band: Vec<f64>,
    /// Map from level index to band row, and back.
    order: Vec<usize>,
    slots: Vec<usize>,
}

impl BandLu {
    pub fn factor(l: &Level) -> Option<BandLu> {
        // number the shorter dimension fastest to keep the band narrow
        let by_rows = l.mx <= l.my;
        let (fast, slow) = if by_rows { (l.mx, l.my) } else { (l.my, l.mx) };
        let n = fast * slow;
        let bw = fast + 1;
        let w = 2 * bw + 1;
        let mut order = Vec::with_capacity(n);
        let mut slots = vec![usize::MAX; l.len()];
        for s in 1..=slow {
            for f in 1..=fast {
                let node = if by_rows { l.idx(f, s) } else { l.idx(s, f) };
                slots[node] = order.len();
                order.push(node);
            }
        }
        let mut band = vec![0.0; n * w];
        for (r, &node) in order.iter().enumerate() {
            for k in 0..9 {
                let v = l.a[node][k];
                if v == 0.0 {
                    continue;
                }
                let c = slots[l.nb(node, k)];
                if c == usize::MAX {
                    continue;
                }
                band[r * w + (c + bw - r)] += v;
            }
        }
        for kcol in 0..n {
            let piv = band[kcol * w + bw];
            if piv == 0.0 || !piv.is_finite() {
                return None;
            }
            for r in kcol + 1..(kcol + bw + 1).min(n) {
                let lr = band[r * w + (kcol + bw - r)] / piv;
                if lr == 0.0 {
                    continue;
                }
                band[r * w + (kcol + bw - r)] = lr;
                for c in kcol + 1..(kcol + bw + 1).min(n) {
                    band[r * w + (c + bw - r)] -= lr * band[kcol * w + (c + bw - kcol)];
                }
            }
        }
        Some(BandLu { n, bw, band, order, slots })
    }

    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        let w = 2 * bw + 1;
        let mut y: Vec<f64> = self.order.iter().map(|&node| b[node]).collect();
        for r in 0..n {
            let mut acc = y[r];
            for c in r.saturating_sub(bw)..r {
                acc -= self.band[r * w + (c + bw - r)] * y[c];
            }
            y[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = y[r];
            for c in r + 1..(r + bw + 1).min(n) {
                acc -= self.band[r * w + (c + bw - r)] * y[c];
            }
            y[r] = acc / self.band[r * w + bw];
        }
        for (r, &node) in self.order.iter().enumerate() {
            x[node] = y[r];
        }
        debug_assert_eq!(self.slots.len(), x.len());
    }
}

impl Level {
    /// `min over nodes of a_center / Σ|a_off|`.
    pub fn dominance(&self) -> f64 {
        let mut m = f64::INFINITY;
        for j in 1..=self.my {
            for i in 1..=self.mx {
                let s = &self.a[self.idx(i, j)];
                let off: f64 = (0..9).filter(|&k| k != CENTER).map(|k| s[k].abs()).sum();
                m = m.min(s[CENTER] / off);
            }
        }
        m
    }
}
