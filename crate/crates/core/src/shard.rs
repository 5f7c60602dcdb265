//! Binary shard files for packed blocks and masked examples, plus the
//! JSON manifest that ties a shard set together.
//!
//! Each shard is self-validating: magic, format version, record kind,
//! record count, little-endian records, and a trailing SHA-256 over
//! everything before it. A flipped byte anywhere makes that one shard
//! unreadable without affecting its neighbours.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pack::{MaskPolicy, MaskedExample, Segment, SequenceBlock};

const MAGIC: &[u8; 4] = b"TWFG";
const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

/// Fixed-width little-endian record encoding for one shardable type.
pub trait ShardRecord: Sized {
    const KIND: u8;
    const KIND_NAME: &'static str;

    fn write_record(&self, out: &mut Vec<u8>);
    fn read_record(r: &mut SliceReader<'_>) -> std::result::Result<Self, String>;
}

/// Bounds-checked cursor over a shard's record bytes.
pub struct SliceReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> SliceReader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        SliceReader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        if self.pos + n > self.buf.len() {
            return Err(format!(
                "record runs past end of shard at byte {} (wanted {n} more)",
                self.pos
            ));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn exhausted(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

fn read_str(r: &mut SliceReader<'_>) -> std::result::Result<String, String> {
    let len = r.u32()? as usize;
    let bytes = r.take(len)?;
    String::from_utf8(bytes.to_vec()).map_err(|_| "non-UTF-8 string field".to_string())
}

fn put_ids(out: &mut Vec<u8>, ids: &[u32]) {
    put_u32(out, ids.len() as u32);
    for &id in ids {
        put_u32(out, id);
    }
}

fn read_ids(r: &mut SliceReader<'_>) -> std::result::Result<Vec<u32>, String> {
    let n = r.u32()? as usize;
    let mut ids = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        ids.push(r.u32()?);
    }
    Ok(ids)
}

impl ShardRecord for SequenceBlock {
    const KIND: u8 = 0;
    const KIND_NAME: &'static str = "blocks";

    fn write_record(&self, out: &mut Vec<u8>) {
        put_ids(out, &self.ids);
        put_u32(out, self.boundary_map.len() as u32);
        for seg in &self.boundary_map {
            put_str(out, &seg.tweet_id);
            put_u32(out, seg.start as u32);
            put_u32(out, seg.end as u32);
        }
        put_u32(out, self.pad_count as u32);
    }

    fn read_record(r: &mut SliceReader<'_>) -> std::result::Result<Self, String> {
        let ids = read_ids(r)?;
        let n_segs = r.u32()? as usize;
        let mut boundary_map = Vec::with_capacity(n_segs.min(1 << 16));
        for _ in 0..n_segs {
            let tweet_id = read_str(r)?;
            let start = r.u32()? as usize;
            let end = r.u32()? as usize;
            boundary_map.push(Segment { tweet_id, start, end });
        }
        let pad_count = r.u32()? as usize;
        Ok(SequenceBlock { ids, boundary_map, pad_count })
    }
}

impl ShardRecord for MaskedExample {
    const KIND: u8 = 1;
    const KIND_NAME: &'static str = "masked";

    fn write_record(&self, out: &mut Vec<u8>) {
        put_ids(out, &self.input_ids);
        put_u32(out, self.label_positions.len() as u32);
        for &p in &self.label_positions {
            put_u32(out, p as u32);
        }
        for &l in &self.labels {
            put_u32(out, l);
        }
    }

    fn read_record(r: &mut SliceReader<'_>) -> std::result::Result<Self, String> {
        let input_ids = read_ids(r)?;
        let k = r.u32()? as usize;
        let mut label_positions = Vec::with_capacity(k.min(1 << 16));
        for _ in 0..k {
            label_positions.push(r.u32()? as usize);
        }
        let mut labels = Vec::with_capacity(k.min(1 << 16));
        for _ in 0..k {
            labels.push(r.u32()?);
        }
        Ok(MaskedExample { input_ids, label_positions, labels })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardEntry {
    pub file: String,
    pub count: u64,
    pub sha256: String,
}

/// Sidecar index for a shard directory. Serialized field order is the
/// declaration order, so manifests are byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub kind: String,
    pub shard_size: usize,
    pub total: u64,
    /// Every packed tweet is bracketed bos..eos inside its block.
    pub bracketing: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_policy: Option<MaskPolicy>,
    pub shards: Vec<ShardEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn shard_bytes<T: ShardRecord>(records: &[T]) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.push(T::KIND);
    buf.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for rec in records {
        rec.write_record(&mut buf);
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    buf
}

/// Writes `records` to `dir` in shards of `shard_size`, plus the
/// manifest. Shard files are `{stem}.{index:05}.shard`.
pub fn write_shards<T: ShardRecord>(
    dir: &Path,
    stem: &str,
    records: &[T],
    shard_size: usize,
    mask_policy: Option<MaskPolicy>,
) -> Result<Manifest> {
    if shard_size == 0 {
        return Err(Error::Config("shard_size must be at least 1".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut shards = Vec::new();
    for (i, chunk) in records.chunks(shard_size).enumerate() {
        let file = format!("{stem}.{i:05}.shard");
        let bytes = shard_bytes(chunk);
        let sha = hex(&bytes[bytes.len() - CHECKSUM_LEN..]);
        let path = dir.join(&file);
        std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        shards.push(ShardEntry { file, count: chunk.len() as u64, sha256: sha });
    }
    let manifest = Manifest {
        version: FORMAT_VERSION,
        kind: T::KIND_NAME.to_string(),
        shard_size,
        total: records.len() as u64,
        bracketing: "bos-eos".to_string(),
        mask_policy,
        shards,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::invalid(format!("serialize manifest: {e}")))?;
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let mut file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut json = String::new();
    file.read_to_string(&mut json).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&json).map_err(|e| Error::Shard {
        shard: path.display().to_string(),
        msg: format!("bad manifest: {e}"),
    })
}

fn shard_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Reads and fully validates one shard file.
pub fn read_shard<T: ShardRecord>(path: &Path) -> Result<Vec<T>> {
    let name = shard_name(path);
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let header_len = MAGIC.len() + 4 + 1 + 8;
    if bytes.len() < header_len + CHECKSUM_LEN {
        return Err(Error::Shard { shard: name, msg: "file too short".into() });
    }
    let (body, stored) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    let digest = Sha256::digest(body);
    if digest.as_slice() != stored {
        return Err(Error::ChecksumMismatch { shard: name });
    }
    if &body[..4] != MAGIC {
        return Err(Error::Shard { shard: name, msg: "bad magic bytes".into() });
    }
    let version = u32::from_le_bytes(body[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: format!("{name}: v{version}"),
            expected: format!("v{FORMAT_VERSION}"),
        });
    }
    let kind = body[8];
    if kind != T::KIND {
        return Err(Error::Shard {
            shard: name,
            msg: format!("record kind {kind} is not {} ({})", T::KIND, T::KIND_NAME),
        });
    }
    let count = u64::from_le_bytes(body[9..17].try_into().unwrap());
    let mut reader = SliceReader::new(&body[17..]);
    let mut records = Vec::with_capacity(count.min(1 << 20) as usize);
    for _ in 0..count {
        let rec = T::read_record(&mut reader)
            .map_err(|msg| Error::Shard { shard: name.clone(), msg })?;
        records.push(rec);
    }
    if !reader.exhausted() {
        return Err(Error::Shard { shard: name, msg: "trailing bytes after records".into() });
    }
    Ok(records)
}

/// Reads every shard named by the manifest, in manifest order.
pub fn read_all<T: ShardRecord>(dir: &Path) -> Result<(Manifest, Vec<T>)> {
    let manifest = read_manifest(dir)?;
    if manifest.kind != T::KIND_NAME {
        return Err(Error::invalid(format!(
            "manifest holds {:?} records, not {:?}",
            manifest.kind,
            T::KIND_NAME
        )));
    }
    let mut records = Vec::with_capacity(manifest.total.min(1 << 20) as usize);
    for entry in &manifest.shards {
        let path = shard_path(dir, entry);
        let recs = read_shard::<T>(&path)?;
        if recs.len() as u64 != entry.count {
            return Err(Error::Shard {
                shard: entry.file.clone(),
                msg: format!("manifest says {} records, shard has {}", entry.count, recs.len()),
            });
        }
        records.extend(recs);
    }
    if records.len() as u64 != manifest.total {
        return Err(Error::invalid(format!(
            "manifest total {} != {} records on disk",
            manifest.total,
            records.len()
        )));
    }
    Ok((manifest, records))
}

fn shard_path(dir: &Path, entry: &ShardEntry) -> PathBuf {
    dir.join(&entry.file)
}

/// Streams records to a writer in shard layout; used by tests that
/// need a shard without touching disk.
pub fn write_shard_to<T: ShardRecord, W: Write>(w: &mut W, records: &[T]) -> Result<()> {
    let bytes = shard_bytes(records);
    w.write_all(&bytes).map_err(|e| Error::io("<stream>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pack::{pack_blocks, MaskPolicy};

    fn blocks(n: usize) -> Vec<SequenceBlock> {
        // Each tweet overfills half a block, so packing yields exactly
        // one block per tweet.
        let tweets: Vec<(String, Vec<u32>)> = (0..n)
            .map(|i| (format!("t{i}"), vec![(5 + i) as u32; 100 + i % 20]))
            .collect();
        let (blocks, _) = pack_blocks(tweets, 128).unwrap();
        assert_eq!(blocks.len(), n);
        blocks
    }

    #[test]
    fn ten_blocks_in_shards_of_four_round_trip() {
        let recs = blocks(10);
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_shards(dir.path(), "blocks", &recs, 4, None).unwrap();
        assert_eq!(manifest.shards.len(), 3);
        assert_eq!(
            manifest.shards.iter().map(|s| s.count).collect::<Vec<_>>(),
            vec![4, 4, 2]
        );
        assert_eq!(manifest.total, 10);
        let (back_manifest, back) = read_all::<SequenceBlock>(dir.path()).unwrap();
        assert_eq!(back, recs);
        assert_eq!(back_manifest, manifest);
    }

    #[test]
    fn empty_stream_writes_manifest_only() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_shards::<SequenceBlock>(dir.path(), "blocks", &[], 4, None).unwrap();
        assert_eq!(manifest.total, 0);
        assert!(manifest.shards.is_empty());
        let (_, back) = read_all::<SequenceBlock>(dir.path()).unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn corrupt_shard_is_named_and_neighbours_survive() {
        let recs = blocks(10);
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_shards(dir.path(), "blocks", &recs, 4, None).unwrap();
        let victim = dir.path().join(&manifest.shards[1].file);
        let mut bytes = std::fs::read(&victim).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        std::fs::write(&victim, &bytes).unwrap();

        let err = read_all::<SequenceBlock>(dir.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(&manifest.shards[1].file), "{msg}");

        for healthy in [0, 2] {
            let path = dir.path().join(&manifest.shards[healthy].file);
            assert!(read_shard::<SequenceBlock>(&path).is_ok());
        }
    }

    #[test]
    fn masked_examples_round_trip_with_policy_in_manifest() {
        let src = blocks(6);
        let policy = MaskPolicy { seed: 5, ..MaskPolicy::default() };
        let examples: Vec<MaskedExample> = src
            .iter()
            .enumerate()
            .map(|(i, b)| crate::pack::mask_block(b, i as u64, 0, &policy, 900))
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let manifest =
            write_shards(dir.path(), "masked", &examples, 5, Some(policy.clone())).unwrap();
        assert_eq!(manifest.mask_policy.as_ref(), Some(&policy));
        let (back_manifest, back) = read_all::<MaskedExample>(dir.path()).unwrap();
        assert_eq!(back, examples);
        assert_eq!(back_manifest.mask_policy, Some(policy));
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let recs = blocks(3);
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_shards(dir.path(), "blocks", &recs, 4, None).unwrap();
        let err = read_all::<MaskedExample>(dir.path()).unwrap_err();
        assert!(err.to_string().contains("blocks"));
        let path = dir.path().join(&manifest.shards[0].file);
        let err = read_shard::<MaskedExample>(&path).unwrap_err();
        assert!(matches!(err, Error::Shard { .. } | Error::ChecksumMismatch { .. }));
    }

    #[test]
    fn bad_magic_and_short_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.shard");
        std::fs::write(&path, b"nope").unwrap();
        assert!(matches!(
            read_shard::<SequenceBlock>(&path),
            Err(Error::Shard { .. })
        ));

        // Valid checksum over a bogus header: magic check must fire.
        let mut body = b"XXXX".to_vec();
        body.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        body.push(0);
        body.extend_from_slice(&0u64.to_le_bytes());
        let digest = Sha256::digest(&body);
        body.extend_from_slice(&digest);
        std::fs::write(&path, &body).unwrap();
        let err = read_shard::<SequenceBlock>(&path).unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");
    }

    #[test]
    fn manifest_json_is_stable() {
        let recs = blocks(2);
        let dir = tempfile::tempdir().unwrap();
        write_shards(dir.path(), "blocks", &recs, 4, None).unwrap();
        let a = std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap();
        write_shards(dir.path(), "blocks", &recs, 4, None).unwrap();
        let b = std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(a, b);
    }
}
