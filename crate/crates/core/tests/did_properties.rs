use proptest::prelude::*;

use didbench_core::did::{
    apply_transition, build_initial_document, deactivate, parse_did, Change, Did, DidDocument, ServiceEndpoint,
    Transition, VerificationMethod,
};

fn did() -> Did {
    parse_did("did:example:123").unwrap()
}

fn key(did: &Did, fragment: &str, public_key: &str) -> VerificationMethod {
    VerificationMethod {
        id: did.fragment(fragment),
        key_type: "Ed25519VerificationKey2018".into(),
        controller: did.clone(),
        public_key: public_key.into(),
    }
}

fn initial() -> DidDocument {
    let did = did();
    build_initial_document(&did, key(&did, "key-1", "zInitial")).unwrap()
}

fn transition() -> impl Strategy<Value = Transition> {
    let fragment = prop::sample::select(vec!["key-1", "key-2", "key-3", "service-0", "service-1"]);
    prop_oneof![
        (fragment.clone(), "[a-z]{0,3}", any::<bool>(), any::<bool>()).prop_map(|(f, pk, auth, assertion)| {
            Transition::Update(Change::Key { method: key(&did(), f, &pk), authentication: auth, assertion_method: assertion })
        }),
        (fragment.clone(), prop::sample::select(vec!["https://a.example/", "https://b.example/x", "not a url"])).prop_map(
            |(f, endpoint)| {
                Transition::Update(Change::Service(ServiceEndpoint {
                    id: did().fragment(f),
                    service_type: "linkedDomains".into(),
                    endpoint: endpoint.into(),
                }))
            }
        ),
        fragment.prop_map(|f| Transition::Revoke(format!("#{f}"))),
        Just(Transition::Deactivate),
    ]
}

fn fold(start: &DidDocument, seq: &[Transition]) -> DidDocument {
    seq.iter().fold(start.clone(), |doc, t| apply_transition(&doc, t).unwrap_or(doc))
}

proptest! {
    #[test]
    fn did_strings_round_trip(method in "[a-z0-9]{1,8}", id in "[A-Za-z0-9._:%-]{1,40}") {
        let text = format!("did:{method}:{id}");
        prop_assert_eq!(parse_did(&text).unwrap().to_string(), text);
    }

    #[test]
    fn transitions_are_pure(seq in prop::collection::vec(transition(), 0..8)) {
        let start = initial();
        let snapshot = start.clone();
        let a = fold(&start, &seq);
        let b = fold(&start, &seq);
        prop_assert_eq!(&start, &snapshot);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn references_always_resolve(seq in prop::collection::vec(transition(), 0..10)) {
        let mut doc = initial();
        for t in &seq {
            if let Ok(next) = apply_transition(&doc, t) {
                doc = next;
            }
            prop_assert!(doc.references_resolve());
        }
    }

    #[test]
    fn deactivation_is_absorbing(seq in prop::collection::vec(transition(), 0..8)) {
        let dead = deactivate(&fold(&initial(), &seq));
        for t in &seq {
            let result = apply_transition(&dead, t);
            if *t == Transition::Deactivate {
                prop_assert_eq!(result.unwrap(), dead.clone());
            } else {
                prop_assert!(result.is_err());
            }
        }
    }

    #[test]
    fn repeated_update_is_idempotent(t in transition()) {
        let doc = initial();
        if let (Transition::Update(_), Ok(once)) = (&t, apply_transition(&doc, &t)) {
            prop_assert_eq!(apply_transition(&once, &t).unwrap(), once);
        }
    }
}
