//! Platform and device discovery with GPU-over-CPU priority.

use std::fmt;

use super::BackendError;

/// Ordering matters: `Gpu < Cpu` is the priority key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeviceKind {
    Gpu,
    Cpu,
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeviceKind::Gpu => "gpu",
            DeviceKind::Cpu => "cpu",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DeviceDescriptor {
    pub platform_name: String,
    pub device_kind: DeviceKind,
    pub device_index: usize,
    pub max_parallel_units: usize,
}

impl fmt::Display for DeviceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} #{} [{}] ({} parallel units)",
            self.platform_name, self.device_index, self.device_kind, self.max_parallel_units
        )
    }
}

pub const CPU_PLATFORM: &str = "matcha-parallel-cpu";

/// The built-in multi-core CPU target.
pub fn parallel_cpu() -> DeviceDescriptor {
    let units = std::thread::available_parallelism().map_or(1, |n| n.get());
    DeviceDescriptor {
        platform_name: CPU_PLATFORM.to_string(),
        device_kind: DeviceKind::Cpu,
        device_index: 0,
        max_parallel_units: units,
    }
}

/// Stable sort by (kind, enumeration order).
pub fn order_devices(mut devices: Vec<DeviceDescriptor>) -> Vec<DeviceDescriptor> {
    devices.sort_by_key(|d| d.device_kind);
    devices
}

/// Every usable execution target, highest priority first. No GPU platform is
/// compiled into this build, so the list is the parallel CPU target.
pub fn enumerate_devices() -> Vec<DeviceDescriptor> {
    order_devices(vec![parallel_cpu()])
}

/// Any GPU beats any CPU; within a kind the head of the list wins.
pub fn select_device(devices: &[DeviceDescriptor]) -> Result<DeviceDescriptor, BackendError> {
    devices
        .iter()
        .min_by_key(|d| d.device_kind)
        .cloned()
        .ok_or_else(|| BackendError::Config("no compute devices to choose from".into()))
}
