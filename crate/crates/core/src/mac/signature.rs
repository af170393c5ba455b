use super::crc::crc32;
use super::frame::{build_frame, EthernetFrame, MAX_PAYLOAD, MIN_PAYLOAD};
use super::MacError;

/// Pluggable frame signer. The tag is carried at the end of the data field.
pub trait SignatureHook {
    fn signer_id(&self) -> &str;

    fn tag_len(&self) -> usize;

    fn sign(&self, message: &[u8]) -> Vec<u8>;

    fn verify(&self, message: &[u8], tag: &[u8]) -> bool {
        tag.len() == self.tag_len() && self.sign(message) == tag
    }
}

/// Keyed 8-octet checksum tag for exercising the signing path.
///
/// NOT a signature: anyone who knows the key, or can solve for a CRC, can
/// forge it. It only stands in for a real signer in tests and demos.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSigner {
    id: String,
    key: Vec<u8>,
}

impl TestSigner {
    pub fn new(id: impl Into<String>, key: impl Into<Vec<u8>>) -> Self {
        Self {
            id: id.into(),
            key: key.into(),
        }
    }

    fn half(&self, domain: u8, message: &[u8]) -> [u8; 4] {
        let mut input = Vec::with_capacity(self.key.len() + self.id.len() + 1 + message.len());
        input.extend_from_slice(&self.key);
        input.extend_from_slice(self.id.as_bytes());
        input.push(domain);
        input.extend_from_slice(message);
        crc32(&input).to_be_bytes()
    }
}

impl SignatureHook for TestSigner {
    fn signer_id(&self) -> &str {
        &self.id
    }

    fn tag_len(&self) -> usize {
        8
    }

    fn sign(&self, message: &[u8]) -> Vec<u8> {
        let mut tag = self.half(0, message).to_vec();
        tag.extend_from_slice(&self.half(1, message));
        tag
    }
}

fn signed_message(frame: &EthernetFrame, body: &[u8]) -> Vec<u8> {
    let mut m = Vec::with_capacity(14 + body.len());
    m.extend_from_slice(&frame.dst().0);
    m.extend_from_slice(&frame.src().0);
    m.extend_from_slice(&frame.ethertype().to_be_bytes());
    m.extend_from_slice(body);
    m
}

/// Appends a tag over `dst ‖ src ‖ ethertype ‖ payload` and recomputes the FCS.
///
/// Short payloads are zero-padded first so the tag always ends the data
/// field; that keeps the tag locatable on frames read back off the wire.
pub fn sign_frame(
    frame: &EthernetFrame,
    hook: &dyn SignatureHook,
) -> Result<EthernetFrame, MacError> {
    let mut body = frame.payload().to_vec();
    body.resize(
        body.len().max(MIN_PAYLOAD.saturating_sub(hook.tag_len())),
        0,
    );
    if body.len() + hook.tag_len() > MAX_PAYLOAD {
        return Err(MacError::OversizePayload(body.len() + hook.tag_len()));
    }
    let tag = hook.sign(&signed_message(frame, &body));
    body.extend_from_slice(&tag);
    build_frame(frame.dst(), frame.src(), frame.ethertype(), &body)
}

/// Checks the tag at the end of the data field.
pub fn verify_frame(frame: &EthernetFrame, hook: &dyn SignatureHook) -> Result<(), MacError> {
    let payload = frame.payload();
    let Some(split) = payload.len().checked_sub(hook.tag_len()) else {
        return Err(MacError::SignatureInvalid);
    };
    let (body, tag) = payload.split_at(split);
    if hook.verify(&signed_message(frame, body), tag) {
        Ok(())
    } else {
        Err(MacError::SignatureInvalid)
    }
}
