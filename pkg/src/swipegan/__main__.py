from swipegan.cli import main

raise SystemExit(main())
