//! Shared framing for model files: 4 magic bytes, a little-endian `u32`
//! format version, then little-endian 64-bit words.

use super::ClassifyError;

pub(crate) const FORMAT_VERSION: u32 = 1;

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 4]) -> Self {
        let mut buf = magic.to_vec();
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        Self { buf }
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn f64s(&mut self, vs: &[f64]) -> &mut Self {
        for &v in vs {
            self.f64(v);
        }
        self
    }

    pub fn finish(&mut self) -> Vec<u8> {
        std::mem::take(&mut self.buf)
    }
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8], magic: &[u8; 4]) -> Result<Self, ClassifyError> {
        if bytes.len() < 8 || &bytes[..4] != magic {
            return Err(ClassifyError::Format(format!(
                "expected magic {:?}",
                String::from_utf8_lossy(magic)
            )));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(ClassifyError::Format(format!("unsupported format version {version}")));
        }
        Ok(Self { bytes, pos: 8 })
    }

    fn word(&mut self) -> Result<[u8; 8], ClassifyError> {
        let end = self.pos + 8;
        let w = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| ClassifyError::Format("unexpected end of file".into()))?;
        self.pos = end;
        Ok(w.try_into().expect("8 bytes"))
    }

    pub fn u64(&mut self) -> Result<u64, ClassifyError> {
        Ok(u64::from_le_bytes(self.word()?))
    }

    pub fn usize(&mut self, limit: usize) -> Result<usize, ClassifyError> {
        let v = self.u64()?;
        if v > limit as u64 {
            return Err(ClassifyError::Format(format!("field value {v} exceeds {limit}")));
        }
        Ok(v as usize)
    }

    pub fn f64(&mut self) -> Result<f64, ClassifyError> {
        Ok(f64::from_le_bytes(self.word()?))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>, ClassifyError> {
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn finish(self) -> Result<(), ClassifyError> {
        if self.pos != self.bytes.len() {
            return Err(ClassifyError::Format("trailing bytes".into()));
        }
        Ok(())
    }
}

/// Which model a file holds, from its magic bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Tree,
    Gnb,
    Lstm,
}

pub(crate) const TREE_MAGIC: &[u8; 4] = b"CSDT";
pub(crate) const GNB_MAGIC: &[u8; 4] = b"CSNB";
pub(crate) const LSTM_MAGIC: &[u8; 4] = b"CSLM";

pub fn sniff(bytes: &[u8]) -> Option<ModelKind> {
    match bytes.get(..4)? {
        m if m == TREE_MAGIC => Some(ModelKind::Tree),
        m if m == GNB_MAGIC => Some(ModelKind::Gnb),
        m if m == LSTM_MAGIC => Some(ModelKind::Lstm),
        _ => None,
    }
}
