# Controllers package for command business logic
