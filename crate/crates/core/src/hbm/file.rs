//! Binary image file, little-endian throughout.
//!
//! ```text
//! magic        8 bytes  "HSHBMIMG"
//! version      u32      1
//! slot_bits    u32      64
//! slots/row    u32      8
//! rows/segment u32      2
//! capacity     u64      rows
//! sections     4 x (start u64, rows u64)   model, axon ptr, neuron ptr, synapse
//! max_fan_out  u64
//! overflow     u8       0 = saturate, 1 = wrap
//! models       u32 count, then per model: name, group start u32, group end u32
//! axon keys    u32 count, then names
//! neuron keys  u32 count, then names
//! rows         u64 count, then count x 8 x u64
//! ```
//!
//! Names are a u32 byte length followed by UTF-8 bytes.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::network::EngineConfig;
use crate::neuron::Overflow;

use super::{HbmGeometry, HbmImage, Row, Section, SymbolTable, ROWS_PER_SEGMENT, SLOTS_PER_ROW, SLOT_BITS};

pub const IMAGE_MAGIC: &[u8; 8] = b"HSHBMIMG";
pub const IMAGE_VERSION: u32 = 1;

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.0.write_all(b)?;
        Ok(())
    }
    fn u8(&mut self, v: u8) -> Result<()> {
        self.bytes(&[v])
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn name(&mut self, s: &str) -> Result<()> {
        self.u32(s.len() as u32)?;
        self.bytes(s.as_bytes())
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0; N];
        self.0
            .read_exact(&mut b)
            .map_err(|e| Error::CorruptImage(format!("truncated image: {e}")))?;
        Ok(b)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn name(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let mut buf = Vec::new();
        (&mut self.0).take(len as u64).read_to_end(&mut buf)?;
        if buf.len() != len {
            return Err(Error::CorruptImage("truncated name".into()));
        }
        String::from_utf8(buf).map_err(|_| Error::CorruptImage("name is not UTF-8".into()))
    }
    fn section(&mut self) -> Result<Section> {
        Ok(Section {
            start: self.u64()?,
            rows: self.u64()?,
        })
    }
    fn names(&mut self) -> Result<Vec<String>> {
        let n = self.u32()?;
        (0..n).map(|_| self.name()).collect()
    }
}

pub fn write_image<W: Write>(image: &HbmImage, out: W) -> Result<()> {
    let mut w = Writer(out);
    w.bytes(IMAGE_MAGIC)?;
    w.u32(IMAGE_VERSION)?;
    w.u32(SLOT_BITS)?;
    w.u32(SLOTS_PER_ROW as u32)?;
    w.u32(ROWS_PER_SEGMENT as u32)?;
    w.u64(image.geometry.capacity_rows)?;
    for s in image.geometry.sections() {
        w.u64(s.start)?;
        w.u64(s.rows)?;
    }
    w.u64(image.config.max_fan_out as u64)?;
    w.u8(match image.config.overflow {
        Overflow::Saturate => 0,
        Overflow::Wrap => 1,
    })?;
    let st = &image.symtab;
    w.u32(st.model_names.len() as u32)?;
    for (name, g) in st.model_names.iter().zip(&st.model_groups) {
        w.name(name)?;
        w.u32(g.start)?;
        w.u32(g.end)?;
    }
    for keys in [&st.axon_keys, &st.neuron_keys] {
        w.u32(keys.len() as u32)?;
        for k in keys {
            w.name(k)?;
        }
    }
    w.u64(image.rows.len() as u64)?;
    for row in &image.rows {
        for &slot in row {
            w.u64(slot)?;
        }
    }
    w.0.flush()?;
    Ok(())
}

pub fn read_image<R: Read>(input: R) -> Result<HbmImage> {
    let mut r = Reader(input);
    if &r.array::<8>()? != IMAGE_MAGIC {
        return Err(Error::CorruptImage("bad magic".into()));
    }
    let version = r.u32()?;
    if version != IMAGE_VERSION {
        return Err(Error::CorruptImage(format!("unsupported image version {version}")));
    }
    let shape = (r.u32()?, r.u32()?, r.u32()?);
    if shape != (SLOT_BITS, SLOTS_PER_ROW as u32, ROWS_PER_SEGMENT as u32) {
        return Err(Error::CorruptImage(format!("unsupported slot geometry {shape:?}")));
    }
    let geometry = HbmGeometry {
        capacity_rows: r.u64()?,
        model_section: r.section()?,
        axon_ptr_section: r.section()?,
        neuron_ptr_section: r.section()?,
        synapse_section: r.section()?,
    };
    let max_fan_out = r.u64()? as usize;
    let overflow = match r.u8()? {
        0 => Overflow::Saturate,
        1 => Overflow::Wrap,
        v => return Err(Error::CorruptImage(format!("bad overflow mode {v}"))),
    };
    let n_models = r.u32()?;
    let mut model_names = Vec::new();
    let mut model_groups = Vec::new();
    for _ in 0..n_models {
        model_names.push(r.name()?);
        model_groups.push(r.u32()?..r.u32()?);
    }
    let axon_keys = r.names()?;
    let neuron_keys = r.names()?;
    let n_rows = r.u64()?;
    if n_rows != geometry.used_rows() {
        return Err(Error::CorruptImage(format!(
            "{n_rows} rows stored, geometry expects {}",
            geometry.used_rows()
        )));
    }
    let mut rows: Vec<Row> = Vec::new();
    for _ in 0..n_rows {
        let mut row = [0; SLOTS_PER_ROW];
        for slot in &mut row {
            *slot = r.u64()?;
        }
        rows.push(row);
    }
    let mut trailing = [0u8; 1];
    if r.0.read(&mut trailing)? != 0 {
        return Err(Error::CorruptImage("trailing bytes after rows".into()));
    }
    Ok(HbmImage {
        geometry,
        config: EngineConfig { max_fan_out, overflow },
        rows,
        symtab: SymbolTable::new(axon_keys, neuron_keys, model_names, model_groups)?,
    })
}
