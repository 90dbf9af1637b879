//! DNS wire encoding: recursive A queries and the minimal response check.

use std::net::Ipv4Addr;

use hickory_proto::op::{Message, MessageType, OpCode, Query, ResponseCode};
use hickory_proto::rr::rdata::A;
use hickory_proto::rr::{Name, RData, Record, RecordType};

use crate::error::{DnsError, Result};

pub fn parse_name(name: &str) -> Result<Name> {
    let invalid = |reason: String| DnsError::InvalidName {
        name: name.to_string(),
        reason,
    };
    if name.trim().is_empty() {
        return Err(invalid("empty name".into()));
    }
    let mut parsed = Name::from_ascii(name.trim()).map_err(|e| invalid(e.to_string()))?;
    parsed.set_fqdn(true);
    Ok(parsed)
}

/// Standard query, recursion desired, one A question.
pub fn build_query(id: u16, name: &str) -> Result<Vec<u8>> {
    let mut msg = Message::new();
    msg.set_id(id)
        .set_message_type(MessageType::Query)
        .set_op_code(OpCode::Query)
        .set_recursion_desired(true);
    msg.add_query(Query::query(parse_name(name)?, RecordType::A));
    msg.to_vec().map_err(|e| DnsError::Encode(e.to_string()))
}

/// A response answers the query when it parses, carries the query's ID and
/// the QR bit, and reports NOERROR or NXDOMAIN.
pub fn is_valid_response(bytes: &[u8], id: u16) -> bool {
    match Message::from_vec(bytes) {
        Ok(msg) => {
            msg.id() == id
                && msg.message_type() == MessageType::Response
                && matches!(msg.response_code(), ResponseCode::NoError | ResponseCode::NXDomain)
        }
        Err(_) => false,
    }
}

/// Answer a query with a fixed documentation address; None if `query` is
/// not a parseable DNS query.
pub fn build_response(query: &[u8]) -> Option<Vec<u8>> {
    let req = Message::from_vec(query).ok()?;
    if req.message_type() != MessageType::Query {
        return None;
    }
    let mut resp = Message::new();
    resp.set_id(req.id())
        .set_message_type(MessageType::Response)
        .set_op_code(OpCode::Query)
        .set_recursion_desired(req.recursion_desired())
        .set_recursion_available(true)
        .set_response_code(ResponseCode::NoError);
    for q in req.queries() {
        resp.add_query(q.clone());
        if q.query_type() == RecordType::A {
            resp.add_answer(Record::from_rdata(
                q.name().clone(),
                60,
                RData::A(A(Ipv4Addr::new(192, 0, 2, 1))),
            ));
        }
    }
    resp.to_vec().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_round_trip() {
        let q = build_query(0xBEEF, "example.com").unwrap();
        assert_eq!(&q[..2], &[0xBE, 0xEF]);
        // flags: QR=0, opcode 0, RD=1
        assert_eq!(q[2], 0x01);
        let resp = build_response(&q).unwrap();
        assert!(is_valid_response(&resp, 0xBEEF));
        assert!(!is_valid_response(&resp, 0xBEEE));
        // a query is not a response
        assert!(!is_valid_response(&q, 0xBEEF));
        assert!(!is_valid_response(&[1, 2, 3], 0xBEEF));
    }

    #[test]
    fn rcode_filter() {
        let q = build_query(5, "a.test").unwrap();
        for (rcode, ok) in [
            (ResponseCode::NXDomain, true),
            (ResponseCode::ServFail, false),
            (ResponseCode::Refused, false),
        ] {
            let mut m = Message::from_vec(&build_response(&q).unwrap()).unwrap();
            m.set_response_code(rcode);
            assert_eq!(is_valid_response(&m.to_vec().unwrap(), 5), ok, "{rcode:?}");
        }
    }

    #[test]
    fn rejects_bad_names() {
        assert!(parse_name("").is_err());
        assert!(parse_name(&format!("{}.com", "a".repeat(64))).is_err());
        assert!(parse_name("www.example.org.").is_ok());
    }
}
