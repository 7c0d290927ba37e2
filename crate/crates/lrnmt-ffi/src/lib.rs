//! C ABI bindings; filled in once the core crate stabilizes.
