//! Generators for the rectangle constructions, the Heisenberg square, the
//! Cantor set `C_d` and the product set `F_s`, both as exact combinatorial
//! descriptions and as weighted point clouds.

mod cloud;
mod ifs;
mod rects;

pub use cloud::{
    cantor_cloud, expected_dims, family_cloud, fs_cloud, hsquare_cloud, ifs_cloud, product_cloud, segment_cloud,
    Axis, ExpectedDims, Source, WeightedCloud, HSQUARE_T_BOUND,
};
pub use ifs::{cantor_ifs, hsquare_ifs, AxisMap, CantorParams, Contraction, IfsMapH, SQUARE_CORNERS};
pub use rects::{build_family, subdivide_rect, ExampleParams, Rect2, RectFamily};

/// Cap on rectangles per family and points per cloud.
pub const MAX_ITEMS: usize = 10_000_000;

/// Build a rectangle family and sample it in one go.
pub fn example_cloud(params: ExampleParams, level: u32, samples_per_rect: usize) -> crate::Result<(RectFamily, WeightedCloud)> {
    let fam = build_family(params, level)?;
    let cloud = family_cloud(&fam, params, samples_per_rect)?;
    Ok((fam, cloud))
}
