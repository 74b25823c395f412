/// Dyadic box: scale `level` and per-axis index. Unused axes carry index 0.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoxKey {
    pub level: u8,
    pub idx: [u32; 3],
}

impl BoxKey {
    pub const ROOT: BoxKey = BoxKey { level: 0, idx: [0; 3] };

    pub fn new(level: u8, idx: &[u32]) -> Self {
        let mut i = [0u32; 3];
        i[..idx.len()].copy_from_slice(idx);
        BoxKey { level, idx: i }
    }

    pub fn parent(&self) -> BoxKey {
        debug_assert!(self.level > 0);
        BoxKey {
            level: self.level - 1,
            idx: [self.idx[0] >> 1, self.idx[1] >> 1, self.idx[2] >> 1],
        }
    }

    /// Child `c`; bit `a` of `c` is the parity along axis `a`.
    pub fn child(&self, d: usize, c: usize) -> BoxKey {
        let mut idx = [0u32; 3];
        for a in 0..d {
            idx[a] = (self.idx[a] << 1) | ((c >> a) & 1) as u32;
        }
        BoxKey { level: self.level + 1, idx }
    }

    pub fn children(&self, d: usize) -> impl Iterator<Item = BoxKey> + '_ {
        (0..1usize << d).map(move |c| self.child(d, c))
    }

    /// Index of this box among its siblings.
    pub fn child_index(&self, d: usize) -> usize {
        (0..d).map(|a| ((self.idx[a] & 1) as usize) << a).sum()
    }

    pub fn ancestor(&self, level: u8) -> BoxKey {
        let sh = self.level - level;
        BoxKey { level, idx: [self.idx[0] >> sh, self.idx[1] >> sh, self.idx[2] >> sh] }
    }

    /// Box displaced by `shift` (in boxes of the same scale). Returns `None`
    /// when leaving `[0,1]^d` unless `periodic`, in which case it wraps.
    pub fn shifted(&self, d: usize, shift: &[i64], periodic: bool) -> Option<BoxKey> {
        let n = 1i64 << self.level;
        let mut idx = [0u32; 3];
        for a in 0..d {
            let mut v = self.idx[a] as i64 + shift[a];
            if periodic {
                v = v.rem_euclid(n);
            } else if v < 0 || v >= n {
                return None;
            }
            idx[a] = v as u32;
        }
        Some(BoxKey { level: self.level, idx })
    }

    /// Lower corner and edge length.
    pub fn corner(&self, d: usize) -> ([f64; 3], f64) {
        let h = (-(self.level as f64)).exp2();
        let mut c = [0.0; 3];
        for a in 0..d {
            c[a] = self.idx[a] as f64 * h;
        }
        (c, h)
    }

    /// Scale-`level` box containing `x`; points on a dyadic boundary go to
    /// the lower-index box.
    pub fn containing(level: u8, x: &[f64]) -> BoxKey {
        let n = (1u64 << level) as f64;
        let mut idx = [0u32; 3];
        for (a, &xa) in x.iter().enumerate() {
            let v = (xa * n).ceil() - 1.0;
            idx[a] = v.clamp(0.0, n - 1.0) as u32;
        }
        BoxKey { level, idx }
    }
}
