/// Splits text into physical lines, keeping line terminators. A final
/// segment without a terminator is a line; empty text has no lines.
pub fn split_lines(content: &str) -> Vec<&str> {
    content.split_inclusive('\n').collect()
}

/// Decodes file bytes, replacing invalid UTF-8. Returns `None` for content
/// that looks binary (a NUL byte in the first 8000 bytes, as git does).
pub fn decode(bytes: &[u8]) -> Option<String> {
    let probe = &bytes[..bytes.len().min(8000)];
    if probe.contains(&0) {
        return None;
    }
    Some(String::from_utf8_lossy(bytes).into_owned())
}
