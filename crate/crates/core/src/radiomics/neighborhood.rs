//! Voxel offset tables for 3D texture matrices.

/// The 13 unique distance-1 directions of the 26-neighborhood: each pair
/// {d, -d} is represented once, by the member whose first nonzero
/// component is positive.
pub const DIRECTIONS_13: [[i64; 3]; 13] = [
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 1, 0],
    [1, -1, 0],
    [1, 0, 1],
    [1, 0, -1],
    [0, 1, 1],
    [0, 1, -1],
    [1, 1, 1],
    [1, 1, -1],
    [1, -1, 1],
    [1, -1, -1],
];

/// All 26 neighbor offsets.
pub fn neighbors_26() -> impl Iterator<Item = [i64; 3]> {
    DIRECTIONS_13.iter().flat_map(|&d| [d, [-d[0], -d[1], -d[2]]])
}

#[inline]
pub fn shift(c: [i64; 3], d: [i64; 3], k: i64) -> [i64; 3] {
    [c[0] + k * d[0], c[1] + k * d[1], c[2] + k * d[2]]
}
