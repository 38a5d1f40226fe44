//! Little-endian byte-buffer primitives shared by the serializers.

use crate::error::{Error, Result};

pub(crate) fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn take_u64(input: &mut &[u8]) -> Result<u64> {
    if input.len() < 8 {
        return Err(Error::Corrupt("truncated input"));
    }
    let (head, rest) = input.split_at(8);
    *input = rest;
    Ok(u64::from_le_bytes(head.try_into().unwrap()))
}

pub(crate) fn take_u8(input: &mut &[u8]) -> Result<u8> {
    if input.is_empty() {
        return Err(Error::Corrupt("truncated input"));
    }
    let b = input[0];
    *input = &input[1..];
    Ok(b)
}

pub(crate) fn take_bytes<'a>(input: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if input.len() < n {
        return Err(Error::Corrupt("truncated input"));
    }
    let (head, rest) = input.split_at(n);
    *input = rest;
    Ok(head)
}
