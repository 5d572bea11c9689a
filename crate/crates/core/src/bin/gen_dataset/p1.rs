//! The projective line over Z/N: canonical indexing of Manin symbols (c:d)
//! and the right action of integer matrices on them.

/// P1(Z/N) with an O(1) lookup table from raw pairs to class indices.
pub struct P1 {
    n: i64,
    /// One representative pair per class, in discovery order.
    reps: Vec<(i64, i64)>,
    /// Flat table of size n*n: (c mod n)*n + (d mod n) -> class index,
    /// u32::MAX for pairs with gcd(c, d, n) > 1.
    table: Vec<u32>,
}

impl P1 {
    pub fn new(n: u32) -> P1 {
        assert!(n >= 1, "level must be positive");
        let n = i64::from(n);
        let mut table = vec![u32::MAX; (n * n) as usize];
        let units: Vec<i64> = (0..n).filter(|&u| gcd(u, n) == 1).collect();
        let mut reps = Vec::new();
        for c in 0..n {
            for d in 0..n {
                if gcd(gcd(c, d), n) != 1 {
                    continue;
                }
                if table[(c * n + d) as usize] != u32::MAX {
                    continue;
                }
                let class = reps.len() as u32;
                reps.push((c, d));
                // Mark the whole unit-scaling orbit of (c, d).
                for &u in &units {
                    let uc = (c * u).rem_euclid(n);
                    let ud = (d * u).rem_euclid(n);
                    table[(uc * n + ud) as usize] = class;
                }
            }
        }
        P1 { n, reps, table }
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn modulus(&self) -> i64 {
        self.n
    }

    pub fn rep(&self, index: u32) -> (i64, i64) {
        self.reps[index as usize]
    }

    /// Class of the pair (c, d); the pair must satisfy gcd(c, d, N) = 1.
    pub fn index_of(&self, c: i64, d: i64) -> u32 {
        let c = c.rem_euclid(self.n);
        let d = d.rem_euclid(self.n);
        let idx = self.table[(c * self.n + d) as usize];
        debug_assert!(idx != u32::MAX, "({c}:{d}) is not in P1(Z/{})", self.n);
        idx
    }

    /// Right action of an integer matrix [[a, b], [c', d']] on (c:d),
    /// i.e. the bottom row of [*, *; c, d] * g.
    pub fn apply(&self, index: u32, g: [i64; 4]) -> u32 {
        let (c, d) = self.rep(index);
        let [a, b, cc, dd] = g;
        self.index_of(c * a + d * cc, c * b + d * dd)
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
