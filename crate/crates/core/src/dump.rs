//! Line-oriented chain dumps and their independent verification.
//!
//! ```text
//! trainchain-dump v1
//! target <64 hex>                  only if the chain has nonce-search blocks
//! block <height>
//! header <234 hex>
//! tx <hex>                         one line per transaction, at least one
//! certificate <306 hex>            certificate blocks only
//! record <json>                    certificate blocks only
//! record-signature <128 hex>       certificate blocks only
//! ...
//! end
//! ```
//!
//! Hex is lowercase, lines end in `\n`, and nothing may follow `end`. The
//! record line is signed byte for byte by the server, so any edit to it
//! breaks the signature.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::certificate::{Certificate, CERTIFICATE_LEN};
use crate::consensus::{audit_block, audit_record, verify_record_line, CycleRecord};
use crate::crypto::{PublicKey, Signature};
use crate::ledger::{validate_chain, Block, BlockHeader, BlockVerdict, Chain, PowTarget, ProofKind, HEADER_LEN};

pub const DUMP_MAGIC: &str = "trainchain-dump v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct DumpError {
    pub line: usize,
    pub message: String,
}

/// The signed record attached to a certificate block.
#[derive(Debug, Clone, PartialEq)]
pub struct DumpRecord {
    /// Exact JSON line as written.
    pub json: String,
    pub record: CycleRecord,
    pub signature: Signature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DumpBlock {
    pub block: Block,
    pub record: Option<DumpRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDump {
    pub target: Option<PowTarget>,
    pub blocks: Vec<DumpBlock>,
}

impl ChainDump {
    pub fn chain(&self) -> Chain {
        Chain::from_blocks(self.blocks.iter().map(|b| b.block.clone()).collect())
    }
}

/// Renders `chain`. Each certificate block is paired with the committed
/// record whose block hash matches, with its server signature.
pub fn write_dump(chain: &Chain, target: &PowTarget, records: &[(CycleRecord, Signature)]) -> String {
    let mut out = String::new();
    out.push_str(DUMP_MAGIC);
    out.push('\n');
    if chain.blocks().iter().any(|b| b.header.proof_kind == ProofKind::PowNonce) {
        writeln!(out, "target {}", target.to_hex()).unwrap();
    }
    for (height, block) in chain.blocks().iter().enumerate() {
        writeln!(out, "block {height}").unwrap();
        writeln!(out, "header {}", hex::encode(block.header.to_bytes())).unwrap();
        for tx in &block.transactions {
            writeln!(out, "tx {}", hex::encode(tx)).unwrap();
        }
        if let Some(cert) = &block.certificate {
            writeln!(out, "certificate {}", hex::encode(cert.to_bytes())).unwrap();
            let hash = block.hash();
            if let Some((record, sig)) = records.iter().find(|(r, _)| r.block_hash == Some(hash)) {
                writeln!(out, "record {}", record.to_json_line()).unwrap();
                writeln!(out, "record-signature {}", hex::encode(sig.to_bytes())).unwrap();
            }
        }
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    items: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> DumpError {
        DumpError { line: self.pos.min(self.items.len().saturating_sub(1)) + 1, message: message.into() }
    }

    fn peek_key(&self) -> Option<&'a str> {
        self.items.get(self.pos).map(|l| l.split_once(' ').map_or(*l, |(k, _)| k))
    }

    fn next_field(&mut self, key: &str) -> Result<&'a str, DumpError> {
        let line =
            *self.items.get(self.pos).ok_or_else(|| self.err(format!("expected `{key}`, found end of input")))?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => {
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err(format!("expected `{key}`"))),
        }
    }

    fn next_hex(&mut self, key: &str, len: Option<usize>) -> Result<Vec<u8>, DumpError> {
        let v = self.next_field(key)?;
        if !v.bytes().all(|c| matches!(c, b'0'..=b'9' | b'a'..=b'f')) {
            self.pos -= 1;
            return Err(self.err(format!("`{key}` is not lowercase hex")));
        }
        let bytes = hex::decode(v).map_err(|e| {
            let message = format!("`{key}`: {e}");
            DumpError { line: self.pos, message }
        })?;
        if len.is_some_and(|n| n != bytes.len()) {
            return Err(DumpError { line: self.pos, message: format!("`{key}` has {} bytes", bytes.len()) });
        }
        Ok(bytes)
    }
}

pub fn parse_dump(text: &str) -> Result<ChainDump, DumpError> {
    let body = text.strip_suffix('\n').ok_or(DumpError { line: 0, message: "missing final newline".into() })?;
    let mut lines = Lines { items: body.split('\n').collect(), pos: 0 };
    if lines.items.iter().any(|l| l.contains('\r')) {
        return Err(DumpError { line: 0, message: "carriage return in dump".into() });
    }
    if lines.items.first() != Some(&DUMP_MAGIC) {
        return Err(lines.err("not a trainchain dump"));
    }
    lines.pos = 1;

    let mut target = None;
    if lines.peek_key() == Some("target") {
        let bytes = lines.next_hex("target", Some(32))?;
        target = Some(PowTarget(bytes.try_into().expect("32 bytes")));
    }

    let mut blocks = Vec::new();
    while lines.peek_key() == Some("block") {
        let height = lines.next_field("block")?;
        if height != blocks.len().to_string() {
            lines.pos -= 1;
            return Err(lines.err(format!("block number {height:?} out of sequence")));
        }
        let header_bytes = lines.next_hex("header", Some(HEADER_LEN))?;
        let header = BlockHeader::from_bytes(&header_bytes)
            .map_err(|e| DumpError { line: lines.pos, message: e.to_string() })?;
        let mut transactions = Vec::new();
        while lines.peek_key() == Some("tx") {
            transactions.push(lines.next_hex("tx", None)?);
        }
        if transactions.is_empty() {
            return Err(lines.err("block without transactions"));
        }
        let mut certificate = None;
        let mut record = None;
        if lines.peek_key() == Some("certificate") {
            let bytes = lines.next_hex("certificate", Some(CERTIFICATE_LEN))?;
            certificate = Some(
                Certificate::from_bytes(&bytes).map_err(|e| DumpError { line: lines.pos, message: e.to_string() })?,
            );
            if lines.peek_key() == Some("record") {
                let json = lines.next_field("record")?.to_string();
                let parsed: CycleRecord = serde_json::from_str(&json)
                    .map_err(|e| DumpError { line: lines.pos, message: format!("record: {e}") })?;
                let sig = lines.next_hex("record-signature", Some(Signature::LEN))?;
                let signature = Signature::from_bytes(&sig.try_into().expect("64 bytes"));
                record = Some(DumpRecord { json, record: parsed, signature });
            }
        }
        blocks.push(DumpBlock { block: Block { header, transactions, certificate }, record });
    }
    if lines.items.get(lines.pos) != Some(&"end") {
        return Err(lines.err("expected `block` or `end`"));
    }
    if lines.pos + 1 != lines.items.len() {
        lines.pos += 1;
        return Err(lines.err("content after `end`"));
    }
    if target.is_some() == blocks.iter().all(|b| b.block.header.proof_kind == ProofKind::TrainingCertificate) {
        return Err(DumpError {
            line: 2,
            message: "target line must be present exactly when the chain has nonce-search blocks".into(),
        });
    }
    Ok(ChainDump { target, blocks })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockCheck {
    pub height: u64,
    pub chain: BlockVerdict,
    /// Record checks for certificate blocks; `None` for nonce-search blocks.
    pub record_ok: Option<bool>,
    pub detail: Option<String>,
}

impl BlockCheck {
    pub fn is_ok(&self) -> bool {
        self.chain.is_ok() && self.record_ok != Some(false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DumpVerification {
    pub blocks: Vec<BlockCheck>,
}

impl DumpVerification {
    pub fn is_valid(&self) -> bool {
        self.blocks.iter().all(BlockCheck::is_ok)
    }

    pub fn first_failure(&self) -> Option<&BlockCheck> {
        self.blocks.iter().find(|b| !b.is_ok())
    }
}

fn check_record(block: &DumpBlock, server_pubkey: &PublicKey) -> Result<(), String> {
    let rec = block.record.as_ref().ok_or("certificate block has no cycle record")?;
    if !verify_record_line(server_pubkey, &rec.json, &rec.signature) {
        return Err("record signature invalid".into());
    }
    audit_record(&rec.record).map_err(|e| format!("audit: {e}"))?;
    audit_block(&rec.record, &block.block, server_pubkey).map_err(|e| format!("audit: {e}"))
}

/// Re-validates the chain from public data. Certificate blocks must also
/// carry a signed record that passes the audit.
pub fn verify_dump(dump: &ChainDump, server_pubkey: &PublicKey) -> DumpVerification {
    let chain = dump.chain();
    let report = validate_chain(&chain, server_pubkey, &dump.target.unwrap_or(PowTarget::MAX));
    let blocks = report
        .entries
        .into_iter()
        .zip(&dump.blocks)
        .map(|(verdict, block)| {
            let (record_ok, record_detail) = match block.block.header.proof_kind {
                ProofKind::PowNonce => (None, None),
                ProofKind::TrainingCertificate => match check_record(block, server_pubkey) {
                    Ok(()) => (Some(true), None),
                    Err(e) => (Some(false), Some(e)),
                },
            };
            let detail = verdict.proof_detail.clone().or(record_detail);
            BlockCheck { height: verdict.height, chain: verdict, record_ok, detail }
        })
        .collect();
    DumpVerification { blocks }
}
