/// Number of active cluster levels in 1-based epoch `t` of `epochs`: the
/// first quarter uses one level, the second quarter two, the rest three.
/// Clamped to the `available` levels.
pub fn active_prefix(t: usize, epochs: usize, available: usize) -> usize {
    let n = if 4 * t <= epochs {
        1
    } else if 2 * t <= epochs {
        2
    } else {
        3
    };
    n.min(available).max(1)
}
