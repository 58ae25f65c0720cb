//! Fork-join shim: rayon when the `parallel` feature is on, plain calls otherwise.

/// Whether the crate was built with rayon support.
pub const ENABLED: bool = cfg!(feature = "parallel");

#[cfg(feature = "parallel")]
#[inline]
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    rayon::join(a, b)
}

#[cfg(not(feature = "parallel"))]
#[inline]
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    (a(), b())
}

/// Runs four closures, in parallel when available.
pub fn join4<R: Send>(
    a: impl FnOnce() -> R + Send,
    b: impl FnOnce() -> R + Send,
    c: impl FnOnce() -> R + Send,
    d: impl FnOnce() -> R + Send,
) -> [R; 4] {
    let ((ra, rb), (rc, rd)) = join(|| join(a, b), || join(c, d));
    [ra, rb, rc, rd]
}
