from quenchsplit.cli import main

main()
