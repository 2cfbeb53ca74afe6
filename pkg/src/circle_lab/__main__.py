from circle_lab.cli import main

main()
