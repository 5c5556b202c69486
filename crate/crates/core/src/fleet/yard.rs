use crate::model::{module_footprint, ModuleSpec};
use crate::scalar::{ceil_div, Scalar};

/// Paved yard area for `module_count` stacked containers around a central
/// building: ground positions times footprint, plus circulation, plus the
/// building itself.
pub fn yard_area<T: Scalar>(
    module_count: u32,
    spec: &ModuleSpec<T>,
    stack_height: u32,
    central_building_area: T,
    circulation_fraction: T,
) -> T {
    let positions = ground_positions(module_count, stack_height);
    T::from_count(positions) * module_footprint(spec) * (T::one() + circulation_fraction) + central_building_area
}

pub fn ground_positions(module_count: u32, stack_height: u32) -> u64 {
    ceil_div(u64::from(module_count), u64::from(stack_height.max(1)))
}
