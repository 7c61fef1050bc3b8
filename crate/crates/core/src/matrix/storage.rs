use std::sync::Arc;

use parking_lot::{MappedRwLockReadGuard, RwLock, RwLockReadGuard};

use crate::backend::context::DeviceBuffer;

/// Shared element store behind one or more `Matrix` values (a matrix and its
/// transposes point at the same storage).
#[derive(Debug)]
pub(crate) struct Storage {
    pub(crate) state: RwLock<StorageState>,
}

#[derive(Debug)]
pub(crate) struct StorageState {
    /// Authoritative unless `device` is present and dirty. Empty while a
    /// freshly computed device result has never been read back.
    pub(crate) host: Vec<f32>,
    pub(crate) device: Option<DeviceSlot>,
}

#[derive(Debug, Clone)]
pub(crate) struct DeviceSlot {
    pub(crate) buffer: Arc<DeviceBuffer>,
    pub(crate) dirty_on_device: bool,
}

impl StorageState {
    pub(crate) fn host_is_stale(&self) -> bool {
        self.device.as_ref().is_some_and(|d| d.dirty_on_device)
    }

    /// Flushes the owning queue and copies the device copy back. No-op unless
    /// the device holds newer data.
    pub(crate) fn download(&mut self) {
        if let Some(slot) = self.device.as_mut() {
            if slot.dirty_on_device {
                slot.buffer.read_back(&mut self.host);
                slot.dirty_on_device = false;
            }
        }
    }
}

impl Storage {
    pub(crate) fn host(data: Vec<f32>) -> Self {
        Storage {
            state: RwLock::new(StorageState { host: data, device: None }),
        }
    }

    pub(crate) fn on_device(buffer: Arc<DeviceBuffer>) -> Self {
        Storage {
            state: RwLock::new(StorageState {
                host: Vec::new(),
                device: Some(DeviceSlot { buffer, dirty_on_device: true }),
            }),
        }
    }

    /// Read access to up-to-date host data, synchronizing first if needed.
    pub(crate) fn read_host(&self) -> MappedRwLockReadGuard<'_, [f32]> {
        {
            let guard = self.state.read();
            if !guard.host_is_stale() {
                return RwLockReadGuard::map(guard, |s| s.host.as_slice());
            }
        }
        self.state.write().download();
        RwLockReadGuard::map(self.state.read(), |s| s.host.as_slice())
    }
}
