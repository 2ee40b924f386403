//! Corpus files on disk: a raw little-endian code array plus a JSON
//! sidecar describing its shape and element format.
//!
//! The binary layout is row-major, one code per element, each stored in
//! the fewest whole bytes the word width needs (`code_bytes`), least
//! significant byte first, two's complement for signed formats. The
//! sidecar lives next to the data as `<stem>.json` and carries exactly
//! `{rows, cols, word_bits, frac_bits, signed}` — everything a reader
//! needs, nothing it could infer wrong.
//!
//! Readers validate hard: a size mismatch or an out-of-range code is a
//! data-format error that names the byte offset, because a corpus that
//! half-parses would silently skew every statistic computed from it.

use std::fs;
use std::path::{Path, PathBuf};

use gnorm_core::fxp::{FxpFormat, QuantTensor};
use gnorm_core::harness::Corpus;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

// --- Sidecar -----------------------------------------------------------------

/// The JSON sidecar schema, field for field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    /// Number of rows in the code array.
    pub rows: usize,
    /// Number of columns per row.
    pub cols: usize,
    /// Element word width in bits.
    pub word_bits: u32,
    /// Element fraction bits.
    pub frac_bits: u32,
    /// Whether elements are two's-complement signed.
    pub signed: bool,
}

/// Where a corpus file's sidecar lives: same stem, `.json` extension.
pub fn sidecar_path(corpus: &Path) -> PathBuf {
    corpus.with_extension("json")
}

/// Serializes the sidecar for a corpus.
pub fn sidecar_bytes(corpus: &Corpus) -> Vec<u8> {
    let fmt = corpus.format();
    let sc = Sidecar {
        rows: corpus.rows(),
        cols: corpus.cols(),
        word_bits: fmt.word_bits(),
        frac_bits: fmt.frac_bits(),
        signed: fmt.is_signed(),
    };
    let mut out = serde_json::to_vec_pretty(&sc).expect("sidecar is plain data");
    out.push(b'\n');
    out
}

// --- Binary codec --------------------------------------------------------------

/// Serializes every row of a corpus into the raw binary layout.
pub fn encode_codes(corpus: &Corpus) -> Vec<u8> {
    let width = corpus.format().code_bytes();
    let mut out = Vec::with_capacity(corpus.rows() * corpus.cols() * width);
    for r in 0..corpus.rows() {
        for code in corpus.row_codes(r) {
            // Two's complement: the low `8*width` bits of the i64 carry
            // the code with its sign extension already in place.
            out.extend_from_slice(&(code as u64).to_le_bytes()[..width]);
        }
    }
    out
}

/// Decodes one stored element, sign-extending from the stored width.
fn decode_code(bytes: &[u8], fmt: FxpFormat) -> i64 {
    let mut word = [0u8; 8];
    word[..bytes.len()].copy_from_slice(bytes);
    let raw = u64::from_le_bytes(word);
    if fmt.is_signed() {
        let shift = 64 - 8 * bytes.len() as u32;
        ((raw << shift) as i64) >> shift
    } else {
        raw as i64
    }
}

/// Loads a corpus file and its sidecar into a materialized [`Corpus`].
pub fn read_corpus(path: &Path) -> Result<Corpus, CliError> {
    let sc_path = sidecar_path(path);
    let sc_text = fs::read(&sc_path).map_err(|e| CliError::io(&sc_path, e))?;
    let sc: Sidecar = serde_json::from_slice(&sc_text)
        .map_err(|e| CliError::data(format!("{}: {e}", sc_path.display())))?;

    let fmt = FxpFormat::new(sc.word_bits, sc.frac_bits, sc.signed)
        .map_err(|e| CliError::data(format!("{}: {e}", sc_path.display())))?;
    if sc.rows == 0 || sc.cols == 0 {
        return Err(CliError::data(format!(
            "{}: corpus shape {}x{} has no elements",
            sc_path.display(),
            sc.rows,
            sc.cols
        )));
    }

    let data = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let width = fmt.code_bytes();
    let expected = sc
        .rows
        .checked_mul(sc.cols)
        .and_then(|n| n.checked_mul(width))
        .ok_or_else(|| CliError::data(format!("{}: shape overflows", sc_path.display())))?;
    if data.len() != expected {
        return Err(CliError::data(format!(
            "{}: expected {expected} bytes for {}x{} elements of {} bytes, found {}",
            path.display(),
            sc.rows,
            sc.cols,
            width,
            data.len()
        )));
    }

    let mut codes = Vec::with_capacity(sc.rows * sc.cols);
    for (k, chunk) in data.chunks_exact(width).enumerate() {
        let code = decode_code(chunk, fmt);
        if !fmt.contains(code) {
            return Err(CliError::data(format!(
                "{}: code {code} out of range for {fmt} at byte offset {} (row {}, col {})",
                path.display(),
                k * width,
                k / sc.cols,
                k % sc.cols
            )));
        }
        codes.push(code);
    }

    let tensor = QuantTensor::from_codes(sc.rows, sc.cols, fmt, codes)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(Corpus::from_tensor(tensor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use gnorm_core::harness::Generator;

    fn tiny_corpus() -> Corpus {
        Corpus::generated(3, 4, FxpFormat::I8F3, Generator::Gaussian { std: 4.0 }, 7).unwrap()
    }

    #[test]
    fn encode_decode_round_trips_every_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.bin");
        let src = tiny_corpus();
        fs::write(&path, encode_codes(&src)).unwrap();
        fs::write(sidecar_path(&path), sidecar_bytes(&src)).unwrap();

        let back = read_corpus(&path).unwrap();
        assert_eq!(back.rows(), 3);
        assert_eq!(back.cols(), 4);
        assert_eq!(back.format(), FxpFormat::I8F3);
        for r in 0..3 {
            assert_eq!(back.row_codes(r), src.row_codes(r), "row {r} changed on disk");
        }
    }

    #[test]
    fn negative_codes_survive_wide_formats() {
        // 12-bit signed codes occupy two bytes; sign extension must come
        // back from the stored width, not the word width.
        let fmt = FxpFormat::new(12, 5, true).unwrap();
        let tensor =
            QuantTensor::from_codes(1, 3, fmt, vec![-2048, -1, 2047]).unwrap();
        let src = Corpus::from_tensor(tensor);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wide.bin");
        fs::write(&path, encode_codes(&src)).unwrap();
        fs::write(sidecar_path(&path), sidecar_bytes(&src)).unwrap();

        assert_eq!(read_corpus(&path).unwrap().row_codes(0), vec![-2048, -1, 2047]);
    }

    #[test]
    fn missing_sidecar_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.bin");
        fs::write(&path, [0u8; 4]).unwrap();
        match read_corpus(&path) {
            Err(CliError::Io { path: p, .. }) => {
                assert_eq!(p, sidecar_path(&path));
            }
            other => panic!("expected an I/O error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_data_reports_expected_and_found_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.bin");
        let src = tiny_corpus();
        let mut bytes = encode_codes(&src);
        bytes.pop();
        fs::write(&path, bytes).unwrap();
        fs::write(sidecar_path(&path), sidecar_bytes(&src)).unwrap();

        let err = read_corpus(&path).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        let msg = err.to_string();
        assert!(msg.contains("expected 12 bytes"), "bad message: {msg}");
        assert!(msg.contains("found 11"), "bad message: {msg}");
    }

    #[test]
    fn out_of_range_code_names_its_byte_offset() {
        // A 4-bit signed format stores one byte per code; 0x70 = 112 is
        // far outside [-8, 7].
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.bin");
        fs::write(&path, [0x01, 0x02, 0x70, 0x03]).unwrap();
        let sc = Sidecar { rows: 2, cols: 2, word_bits: 4, frac_bits: 2, signed: true };
        fs::write(sidecar_path(&path), serde_json::to_vec(&sc).unwrap()).unwrap();

        let err = read_corpus(&path).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        let msg = err.to_string();
        assert!(msg.contains("byte offset 2"), "bad message: {msg}");
        assert!(msg.contains("row 1, col 0"), "bad message: {msg}");
    }

    #[test]
    fn garbled_sidecar_is_a_data_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.bin");
        fs::write(&path, [0u8; 4]).unwrap();
        fs::write(sidecar_path(&path), b"{not json").unwrap();
        assert_eq!(read_corpus(&path).unwrap_err().exit_code(), 4);
    }
}
