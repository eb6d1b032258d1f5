use crate::error::{Error, Result};

/// Largest modulus accepted.
pub const MAX_MODULUS: u64 = 1 << 16;

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn mod_pow(base: u64, mut exp: u64, m: u64) -> u64 {
    let mut result = 1 % m;
    let mut b = base % m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    result
}

fn check_modulus(p: u64) -> Result<()> {
    if p > MAX_MODULUS {
        return Err(Error::domain(format!("modulus {p} exceeds {MAX_MODULUS}")));
    }
    if !is_prime(p) {
        return Err(Error::domain(format!("{p} is not prime")));
    }
    Ok(())
}

fn order(a: u64, p: u64) -> u64 {
    let mut x = a % p;
    let mut k = 1;
    while x != 1 {
        x = x * a % p;
        k += 1;
    }
    k
}

/// Smallest generator of `Z_p^*`, found by computing element orders.
pub fn find_generator(p: u64) -> Result<u64> {
    check_modulus(p)?;
    (1..p)
        .find(|&a| order(a, p) == p - 1)
        .ok_or_else(|| Error::domain(format!("no generator found for {p}")))
}

/// Prime `p`, generator `a`, and `n`, the bit length of `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DlpGroup {
    p: u64,
    a: u64,
    n: usize,
    dlog: Vec<u64>,
}

impl DlpGroup {
    /// The group with its smallest generator.
    pub fn new(p: u64) -> Result<Self> {
        let a = find_generator(p)?;
        Self::with_generator(p, a)
    }

    pub fn with_generator(p: u64, a: u64) -> Result<Self> {
        check_modulus(p)?;
        if p < 3 {
            return Err(Error::domain("the concept class needs p >= 3"));
        }
        if a == 0 || a >= p || order(a, p) != p - 1 {
            return Err(Error::domain(format!("{a} does not generate Z_{p}^*")));
        }
        let mut dlog = vec![u64::MAX; p as usize];
        let mut x = 1;
        for j in 0..p - 1 {
            dlog[x as usize] = j;
            x = x * a % p;
        }
        let n = (64 - p.leading_zeros()) as usize;
        Ok(Self { p, a, n, dlog })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn generator(&self) -> u64 {
        self.a
    }

    /// Qubits needed to hold any element.
    pub fn bits(&self) -> usize {
        self.n
    }

    pub fn check_unit(&self, x: u64) -> Result<()> {
        if x == 0 || x >= self.p {
            Err(Error::domain(format!("{x} is not a unit mod {}", self.p)))
        } else {
            Ok(())
        }
    }

    /// `j ∈ [0, p−2]` with `a^j ≡ x`, by trying every exponent.
    pub fn dlog_bruteforce(&self, x: u64) -> Result<u64> {
        self.check_unit(x)?;
        let mut y = 1;
        for j in 0..self.p - 1 {
            if y == x {
                return Ok(j);
            }
            y = y * self.a % self.p;
        }
        unreachable!("a generator reaches every unit")
    }

    /// Table lookup equivalent of [`dlog_bruteforce`](Self::dlog_bruteforce).
    pub fn dlog(&self, x: u64) -> Result<u64> {
        self.check_unit(x)?;
        Ok(self.dlog[x as usize])
    }

    pub fn pow(&self, j: u64) -> u64 {
        mod_pow(self.a, j, self.p)
    }

    pub fn units(&self) -> impl Iterator<Item = u64> {
        1..self.p
    }
}

/// The labeling `c_i(x) = +1` iff `log_a x ∈ [i, i + (p−3)/2]`, the interval
/// taken modulo `p − 1` over logs in `[0, p−2]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Concept {
    pub group: DlpGroup,
    i: u64,
}

impl Concept {
    pub fn new(group: DlpGroup, i: u64) -> Result<Self> {
        if i == 0 || i >= group.p() {
            return Err(Error::domain(format!("concept index {i} outside [1, {}]", group.p() - 1)));
        }
        Ok(Self { group, i })
    }

    pub fn index(&self) -> u64 {
        self.i
    }

    pub fn label(&self, x: u64) -> Result<f64> {
        let d = self.group.dlog(x)?;
        let m = self.group.p() - 1;
        let offset = (d + m - self.i % m) % m;
        Ok(if offset <= (self.group.p() - 3) / 2 { 1.0 } else { -1.0 })
    }
}
