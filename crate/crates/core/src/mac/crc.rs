//! IEEE 802.3 CRC-32: reflected polynomial 0xEDB88320, register preset to
//! all ones, result complemented and sent least significant octet first.

const POLY_REFLECTED: u32 = 0xEDB8_8320;

/// Register value left after running a frame *including* its FCS through the
/// CRC, before the final complement.
pub const CRC32_RESIDUE: u32 = 0xDEBB_20E3;

const TABLE: [u32; 256] = build_table();

const fn build_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut r = i as u32;
        let mut k = 0;
        while k < 8 {
            r = if r & 1 != 0 {
                (r >> 1) ^ POLY_REFLECTED
            } else {
                r >> 1
            };
            k += 1;
        }
        table[i] = r;
        i += 1;
    }
    table
}

/// Running CRC-32 register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Crc32 {
    register: u32,
}

impl Default for Crc32 {
    fn default() -> Self {
        Self::new()
    }
}

impl Crc32 {
    pub const fn new() -> Self {
        Self {
            register: 0xFFFF_FFFF,
        }
    }

    pub fn update_byte(&mut self, octet: u8) {
        self.register =
            (self.register >> 8) ^ TABLE[((self.register ^ u32::from(octet)) & 0xFF) as usize];
    }

    pub fn update(&mut self, octets: &[u8]) {
        for &o in octets {
            self.update_byte(o);
        }
    }

    /// Register contents before the final complement.
    pub fn register(&self) -> u32 {
        self.register
    }

    pub fn value(&self) -> u32 {
        !self.register
    }

    /// True once the register has absorbed a message followed by its own FCS.
    pub fn residue_ok(&self) -> bool {
        self.register == CRC32_RESIDUE
    }
}

pub fn crc32(octets: &[u8]) -> u32 {
    let mut crc = Crc32::new();
    crc.update(octets);
    crc.value()
}

/// Frame check sequence octets in transmission order.
pub fn crc32_fcs(octets: &[u8]) -> [u8; 4] {
    crc32(octets).to_le_bytes()
}
