//! Base58 and CIDv0 framing: encode, decode, and the multihash layout.
//!
//!     cargo run -p riga --example cid_roundtrip

use num_bigint::BigUint;
use riga::cidcodec::{base58_decode, base58_encode, cid_from_value, cid_to_value, CidV0};

fn main() {
    let text = base58_encode(b"hello world");
    println!("base58(\"hello world\") = {text}");
    assert_eq!(base58_decode(&text).unwrap(), b"hello world");

    let cid = CidV0::parse("Qmc8N5wtMkvMySqxu4Agy2SGvL2zxYGf4rWmHvMASoUQv6").unwrap();
    println!("\nparsed CID: {cid}");
    println!("  multihash header: {:02x} {:02x}", cid.multihash()[0], cid.multihash()[1]);
    println!("  digest: {}", cid.digest().hex());

    let v = cid_to_value(&cid);
    println!("  as integer: {v}");
    assert_eq!(cid_from_value(&v).unwrap(), cid);

    let zero = cid_from_value(&BigUint::from(0u32)).unwrap();
    println!("\nCID of the zero digest: {zero} (length {})", zero.text().len());

    match CidV0::parse("bafybeigdyrzt5sfp7udm7hu76uh7y26nf3efuylqabf3oclgtqy55fbzdi") {
        Err(e) => println!("\na CIDv1 string is rejected: {e}"),
        Ok(_) => unreachable!("v1 strings are not CIDv0"),
    }
}
