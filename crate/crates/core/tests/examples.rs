//! The cheap examples run to completion.

mod closed_form {
    include!("../examples/closed_form.rs");
    #[test]
    fn runs() {
        main().unwrap();
    }
}

mod vanishing_sweep {
    include!("../examples/vanishing_sweep.rs");
    #[test]
    fn runs() {
        main().unwrap();
    }
}

mod hjb_check {
    include!("../examples/hjb_check.rs");
    #[test]
    fn runs() {
        main().unwrap();
    }
}

mod policy_iteration {
    include!("../examples/policy_iteration.rs");
    #[test]
    fn runs() {
        main().unwrap();
    }
}
